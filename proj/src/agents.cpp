#include "tbforge/agents.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace tbforge::agents {

namespace {

struct RoleInfo {
    AgentRole role;
    std::string_view name;
    std::string_view file;
};

constexpr std::array<RoleInfo, 5> kRoleTable = {{
    {AgentRole::QualityRefiner, "QualityRefiner", "quality_refiner.txt"},
    {AgentRole::TestbenchWriter, "TestbenchWriter", "testbench_writer.txt"},
    {AgentRole::TestbenchReviser, "TestbenchReviser", "testbench_reviser.txt"},
    {AgentRole::ReasoningDistiller, "ReasoningDistiller", "reasoning_distiller.txt"},
    {AgentRole::CodeGenerator, "CodeGenerator", "code_generator.txt"},
}};

// Keep in sync with prompts/*.txt; those files are the user-facing copies.
constexpr std::string_view kQualityRefinerTemplate =
    "You review design specifications for Verilog modules.\n"
    "If the specification below is already clear, complete, and unambiguous, reply with\n"
    "exactly WELL_WRITTEN and nothing else. Otherwise reply with an improved, complete\n"
    "specification text only (no commentary, no code).\n"
    "\n"
    "Specification:\n"
    "{spec}\n";

constexpr std::string_view kTestbenchWriterTemplate =
    "You write self-checking Verilog testbenches.\n"
    "Write a testbench for the module below. The testbench must:\n"
    "- instantiate the module exactly as declared,\n"
    "- drive a thorough set of stimuli and check every output,\n"
    "- print the single line TBFORGE_PASS if and only if all checks succeed,\n"
    "- print a line starting with TBFORGE_FAIL for every mismatch,\n"
    "- end with $finish.\n"
    "Reply with one fenced ```verilog code block containing only the testbench.\n"
    "\n"
    "Specification:\n"
    "{spec}\n"
    "\n"
    "Module under test:\n"
    "```verilog\n"
    "{golden_code}\n"
    "```\n";

constexpr std::string_view kTestbenchReviserTemplate =
    "You revise Verilog testbenches that failed verification.\n"
    "The testbench below was rejected by the compiler or simulator. Fix it so that it\n"
    "compiles, runs, checks every output, prints TBFORGE_PASS only when all checks\n"
    "succeed, prints a TBFORGE_FAIL line for every mismatch, and ends with $finish.\n"
    "Reply with one fenced ```verilog code block containing only the revised testbench.\n"
    "\n"
    "Specification:\n"
    "{spec}\n"
    "\n"
    "Module under test:\n"
    "```verilog\n"
    "{golden_code}\n"
    "```\n"
    "\n"
    "Previous testbench:\n"
    "```verilog\n"
    "{previous_tb}\n"
    "```\n"
    "\n"
    "Failure log (tail):\n"
    "{failure_log}\n";

constexpr std::string_view kReasoningDistillerTemplate =
    "You are an expert Verilog designer. Think through the problem step by step,\n"
    "then give your final implementation.\n"
    "Reply with your reasoning followed by one fenced ```verilog code block\n"
    "containing the complete module.\n"
    "\n"
    "Specification:\n"
    "{spec}\n"
    "{golden_section}";

constexpr std::string_view kCodeGeneratorTemplate =
    "Write a Verilog module implementing the specification below.\n"
    "Reply with one fenced ```verilog code block containing the complete module.\n"
    "\n"
    "Specification:\n"
    "{spec}\n"
    "{interface_section}";

const RoleInfo& info_for(AgentRole role) {
    for (const auto& info : kRoleTable) {
        if (info.role == role) return info;
    }
    throw Error("unknown agent role");
}

bool is_placeholder_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::uint64_t approx_tokens(std::size_t bytes) { return (bytes + 3) / 4; }

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

} // namespace

std::string_view role_name(AgentRole role) { return info_for(role).name; }

std::optional<AgentRole> role_from_name(std::string_view name) {
    for (const auto& info : kRoleTable) {
        if (info.name == name) return info.role;
    }
    return std::nullopt;
}

AgentResponse Backend::complete(AgentRole role, const std::string& prompt) {
    auto start = std::chrono::steady_clock::now();
    AgentResponse response = do_complete(role, prompt);
    response.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    counter_.note_call();
    return response;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open script file: " + path.string());
    json obj;
    try {
        in >> obj;
    } catch (const json::parse_error& e) {
        throw ParseError("malformed script file " + path.string() + ": " + e.what());
    }
    if (!obj.is_object()) throw ValidationError("script file must be a JSON object keyed by role");
    auto backend = std::make_unique<ScriptedBackend>();
    for (const auto& [key, value] : obj.items()) {
        auto role = role_from_name(key);
        if (!role) throw ValidationError("script file: unknown role '" + key + "'");
        if (!value.is_array()) throw ValidationError("script file: role '" + key + "' must map to an array");
        for (const auto& entry : value) {
            if (!entry.is_string())
                throw ValidationError("script file: role '" + key + "' entries must be strings");
            backend->queue(*role, entry.get<std::string>());
        }
    }
    return backend;
}

void ScriptedBackend::queue(AgentRole role, std::string text) {
    std::lock_guard<std::mutex> lock(mutex_);
    scripts_[role].push_back(std::move(text));
}

AgentResponse ScriptedBackend::do_complete(AgentRole role, const std::string& prompt) {
    std::string text;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& entries = scripts_[role];
        std::size_t index = next_index_[role];
        if (index >= entries.size()) {
            throw ScriptExhaustedError(std::string(role_name(role)), index);
        }
        text = entries[index];
        next_index_[role] = index + 1;
    }
    consumed_.fetch_add(1, std::memory_order_relaxed);
    AgentResponse response;
    response.text = std::move(text);
    response.usage.input_tokens = approx_tokens(prompt.size());
    response.usage.output_tokens = approx_tokens(response.text.size());
    return response;
}

std::string render_template(const std::string& templ,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(templ.size());
    std::size_t i = 0;
    while (i < templ.size()) {
        char c = templ[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < templ.size() && is_placeholder_char(templ[j])) ++j;
        if (j > i + 1 && j < templ.size() && templ[j] == '}') {
            std::string name = templ.substr(i + 1, j - i - 1);
            auto it = values.find(name);
            if (it == values.end()) {
                throw TemplateError("unresolved template placeholder '" + name + "'", name);
            }
            out += it->second;
            i = j + 1;
        } else {
            // Not a placeholder; a literal brace passes through.
            out.push_back(c);
            ++i;
        }
    }
    return out;
}

PromptLibrary PromptLibrary::with_defaults() {
    PromptLibrary lib;
    lib.set_template(AgentRole::QualityRefiner, std::string(kQualityRefinerTemplate));
    lib.set_template(AgentRole::TestbenchWriter, std::string(kTestbenchWriterTemplate));
    lib.set_template(AgentRole::TestbenchReviser, std::string(kTestbenchReviserTemplate));
    lib.set_template(AgentRole::ReasoningDistiller, std::string(kReasoningDistillerTemplate));
    lib.set_template(AgentRole::CodeGenerator, std::string(kCodeGeneratorTemplate));
    return lib;
}

void PromptLibrary::set_template(AgentRole role, std::string text) {
    templates_[static_cast<std::size_t>(role)] = std::move(text);
}

void PromptLibrary::load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("prompt directory does not exist: " + dir.string());
    }
    for (const auto& info : kRoleTable) {
        std::filesystem::path file = dir / std::string(info.file);
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file);
        if (!in) throw ConfigError("cannot read prompt template: " + file.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        set_template(info.role, buffer.str());
    }
}

const std::string& PromptLibrary::template_for(AgentRole role) const {
    const std::string& templ = templates_[static_cast<std::size_t>(role)];
    if (templ.empty()) throw TemplateError("no template registered for role", std::string(role_name(role)));
    return templ;
}

std::string PromptLibrary::template_filename(AgentRole role) {
    return std::string(info_for(role).file);
}

std::string PromptLibrary::render(AgentRole role, const corpus::ProblemRecord& record,
                                  const std::map<std::string, std::string>& context) const {
    std::map<std::string, std::string> values;
    values["id"] = record.id;
    values["source"] = record.source;
    values["spec"] = record.spec;
    values["golden_code"] = record.golden_code;
    values["reference_tb"] = record.reference_tb.value_or("");
    for (const auto& [key, value] : context) values[key] = value;
    return render_template(template_for(role), values);
}

std::string extract_code_block(const std::string& response_text) {
    struct Block {
        std::string tag;
        std::string content;
    };
    std::vector<Block> blocks;
    std::istringstream in(response_text);
    std::string line;
    bool inside = false;
    Block current;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = trim(line);
        if (!inside) {
            if (trimmed.rfind("```", 0) == 0) {
                inside = true;
                current = Block{to_lower(trim(trimmed.substr(3))), {}};
            }
        } else {
            if (trimmed == "```") {
                inside = false;
                if (!current.content.empty() && current.content.back() == '\n') {
                    current.content.pop_back();
                }
                blocks.push_back(std::move(current));
            } else {
                current.content += line;
                current.content += '\n';
            }
        }
    }
    // A fence left open by a truncated completion still yields its content;
    // downstream compilation decides whether it is usable.
    if (inside) {
        if (!current.content.empty() && current.content.back() == '\n') current.content.pop_back();
        blocks.push_back(std::move(current));
    }

    auto is_verilog_tag = [](const std::string& tag) {
        return tag == "verilog" || tag == "systemverilog" || tag == "sv" || tag == "v";
    };
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        if (is_verilog_tag(it->tag)) return it->content;
    }
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        if (it->tag.empty()) return it->content;
    }
    throw ExtractionError("no fenced Verilog code block in response");
}

} // namespace tbforge::agents
