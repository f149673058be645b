#include "tbforge/harness.hpp"

#include "tbforge/errors.hpp"
#include "tbforge/subprocess.hpp"

#include <atomic>
#include <fstream>

#include <unistd.h>

namespace tbforge::harness {

namespace {

std::atomic<std::uint64_t> g_workdir_counter{0};

// Fresh private directory per invocation; pid + atomic counter keeps names
// unique across concurrent workers and across processes sharing a root.
std::filesystem::path make_workdir(const ToolConfig& cfg) {
    std::filesystem::create_directories(cfg.workdir_root);
    std::uint64_t seq = g_workdir_counter.fetch_add(1, std::memory_order_relaxed);
    std::filesystem::path dir =
        cfg.workdir_root / ("verify-" + std::to_string(::getpid()) + "-" + std::to_string(seq));
    std::filesystem::create_directory(dir);
    return dir;
}

void write_source(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write source file: " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

bool executable_exists(const std::filesystem::path& path) {
    std::error_code ec;
    return std::filesystem::is_regular_file(path, ec) && access(path.c_str(), X_OK) == 0;
}

} // namespace

std::string_view kind_name(VerifyKind kind) {
    switch (kind) {
        case VerifyKind::Pass: return "pass";
        case VerifyKind::SimFail: return "sim_fail";
        case VerifyKind::CompileError: return "compile_error";
        case VerifyKind::Timeout: return "timeout";
    }
    return "unknown";
}

std::string_view classification_name(Classification c) {
    switch (c) {
        case Classification::Functional: return "functional";
        case Classification::SyntacticOnly: return "syntactic_only";
        case Classification::CompileError: return "compile_error";
    }
    return "unknown";
}

void validate_config(const ToolConfig& cfg) {
    // Sub-millisecond "timeouts" cannot run any tool; reject them as config
    // errors rather than letting every invocation report Timeout.
    if (cfg.compile_timeout < 0.001 || cfg.sim_timeout < 0.001) {
        throw ConfigError("toolchain timeouts must be positive (>= 0.001 s)");
    }
    if (!executable_exists(cfg.compiler_path)) {
        throw ConfigError("compiler executable not found: " + cfg.compiler_path.string());
    }
    if (!executable_exists(cfg.runtime_path)) {
        throw ConfigError("simulation runtime not found: " + cfg.runtime_path.string());
    }
    if (cfg.workdir_root.empty()) {
        throw ConfigError("workdir_root must be set");
    }
}

std::variant<Compiled, VerifyOutcome> compile(const std::vector<std::string>& sources,
                                              const ToolConfig& cfg) {
    validate_config(cfg);
    std::filesystem::path workdir = make_workdir(cfg);

    std::vector<std::string> argv{cfg.compiler_path.string(), "-o", "design.out"};
    for (std::size_t i = 0; i < sources.size(); ++i) {
        std::string name = "src_" + std::to_string(i) + ".v";
        write_source(workdir / name, sources[i]);
        argv.push_back(name);
    }

    proc::ExecResult exec =
        proc::run_command(argv, std::chrono::duration<double>(cfg.compile_timeout), workdir);
    std::string log = proc::format_argv(argv) + "\n" + exec.output;

    if (exec.timed_out) {
        return VerifyOutcome{VerifyKind::Timeout, log + "\n[compile timed out]", exec.wall_seconds};
    }
    if (exec.exit_code != 0) {
        return VerifyOutcome{VerifyKind::CompileError, log, exec.wall_seconds};
    }
    return Compiled{workdir / "design.out", workdir, log, exec.wall_seconds};
}

VerifyOutcome simulate(const std::filesystem::path& artifact, const ToolConfig& cfg) {
    validate_config(cfg);
    if (!std::filesystem::exists(artifact)) {
        throw ConfigError("compiled artifact not found: " + artifact.string());
    }

    std::vector<std::string> argv{cfg.runtime_path.string(), artifact.filename().string()};
    proc::ExecResult exec = proc::run_command(
        argv, std::chrono::duration<double>(cfg.sim_timeout), artifact.parent_path());
    std::string log = proc::format_argv(argv) + "\n" + exec.output;

    if (exec.timed_out) {
        return VerifyOutcome{VerifyKind::Timeout, log + "\n[simulation timed out]", exec.wall_seconds};
    }
    bool pass_seen = exec.output.find(kPassSentinel) != std::string::npos;
    bool fail_seen = exec.output.find(kFailSentinel) != std::string::npos;
    if (fail_seen || exec.exit_code != 0 || !pass_seen) {
        return VerifyOutcome{VerifyKind::SimFail, log, exec.wall_seconds};
    }
    return VerifyOutcome{VerifyKind::Pass, log, exec.wall_seconds};
}

VerifyOutcome verify(const std::string& module_src, const std::string& tb_src,
                     const ToolConfig& cfg) {
    auto compiled = compile({module_src, tb_src}, cfg);
    if (std::holds_alternative<VerifyOutcome>(compiled)) {
        return std::get<VerifyOutcome>(compiled);  // workdir retained for debugging
    }
    const Compiled& artifact = std::get<Compiled>(compiled);
    VerifyOutcome outcome = simulate(artifact.artifact, cfg);
    outcome.log = artifact.log + "\n" + outcome.log;
    outcome.wall_time += artifact.wall_time;
    if (outcome.kind == VerifyKind::Pass) {
        std::error_code ec;
        std::filesystem::remove_all(artifact.workdir, ec);
    }
    return outcome;
}

Classification classify(const std::string& generated_code, const std::string& reference_tb,
                        const ToolConfig& cfg) {
    VerifyOutcome outcome = verify(generated_code, reference_tb, cfg);
    switch (outcome.kind) {
        case VerifyKind::Pass:
            return Classification::Functional;
        case VerifyKind::SimFail:
        case VerifyKind::Timeout:
            // It compiled; a hang or wrong answer is not a compile error.
            return Classification::SyntacticOnly;
        case VerifyKind::CompileError:
            return Classification::CompileError;
    }
    return Classification::CompileError;
}

ToolConfig resolve_toolchain(const std::filesystem::path& workdir_root,
                             const std::filesystem::path& compiler_override,
                             const std::filesystem::path& runtime_override) {
    ToolConfig cfg;
    cfg.workdir_root = workdir_root;

    auto resolve_one = [](const std::filesystem::path& override_path, const char* env_name,
                          const std::string& path_name,
                          const std::string& bundled_name) -> std::filesystem::path {
        if (!override_path.empty()) return override_path;
        if (const char* env = std::getenv(env_name); env && *env) return env;
        if (auto found = proc::find_in_path(path_name)) return *found;
        if (auto exe_dir = proc::current_executable_dir()) {
            std::filesystem::path bundled = *exe_dir / bundled_name;
            if (executable_exists(bundled)) return bundled;
        }
        throw ConfigError("no usable " + path_name +
                          ": set " + env_name + " or install the toolchain");
    };

    cfg.compiler_path =
        resolve_one(compiler_override, "TBFORGE_IVERILOG", "iverilog", "microv-compile");
    cfg.runtime_path = resolve_one(runtime_override, "TBFORGE_VVP", "vvp", "microv-run");
    return cfg;
}

} // namespace tbforge::harness
