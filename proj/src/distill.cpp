#include "tbforge/distill.hpp"

#include "tbforge/errors.hpp"
#include "tbforge/worker_pool.hpp"

#include <chrono>
#include <mutex>

namespace tbforge::distill {

namespace {

// Reasoning is whatever precedes the final code block. DeepSeek-style
// <think>...</think> sections are unwrapped when present.
std::string reasoning_from(const std::string& text) {
    auto think_open = text.find("<think>");
    auto think_close = text.find("</think>");
    if (think_open != std::string::npos && think_close != std::string::npos &&
        think_close > think_open) {
        return text.substr(think_open + 7, think_close - think_open - 7);
    }
    std::vector<std::size_t> fences;
    for (auto pos = text.find("```"); pos != std::string::npos; pos = text.find("```", pos + 3)) {
        fences.push_back(pos);
    }
    if (fences.empty()) return text;
    // Fences alternate open/close from the top; cut at the opener of the
    // last block (scratch code earlier in the reply stays in the reasoning).
    std::size_t open_index = (fences.size() % 2 == 0) ? fences.size() - 2 : fences.size() - 1;
    std::string reasoning = text.substr(0, fences[open_index]);
    while (!reasoning.empty() && (reasoning.back() == '\n' || reasoning.back() == ' ')) {
        reasoning.pop_back();
    }
    return reasoning;
}

} // namespace

std::string_view distill_class_name(DistillClass c) {
    switch (c) {
        case DistillClass::Functional: return "functional";
        case DistillClass::SyntacticOnly: return "syntactic_only";
        case DistillClass::CompileError: return "compile_error";
        case DistillClass::Errored: return "errored";
    }
    return "unknown";
}

DistillClass from_classification(harness::Classification c) {
    switch (c) {
        case harness::Classification::Functional: return DistillClass::Functional;
        case harness::Classification::SyntacticOnly: return DistillClass::SyntacticOnly;
        case harness::Classification::CompileError: return DistillClass::CompileError;
    }
    return DistillClass::Errored;
}

void validate_stats(const RunStats& stats) {
    std::uint64_t sum = stats.functional + stats.syntactic + stats.compile_error + stats.errored;
    if (sum != stats.total) {
        throw ValidationError("class counts sum to " + std::to_string(sum) + ", expected total " +
                              std::to_string(stats.total));
    }
}

DistillRecord distill_one(const corpus::ProblemRecord& record, agents::Backend& backend,
                          const agents::PromptLibrary& prompts, const ClassifyFn& classify,
                          const DistillConfig& cfg) {
    if (!record.reference_tb) {
        throw ValidationError("record '" + record.id + "': distillation requires a reference testbench");
    }

    DistillRecord out;
    out.problem_id = record.id;

    std::map<std::string, std::string> context;
    context["golden_section"] =
        cfg.show_golden ? "\nGolden solution:\n```verilog\n" + record.golden_code + "\n```\n" : "";

    try {
        auto prompt = prompts.render(agents::AgentRole::ReasoningDistiller, record, context);
        auto response = backend.complete(agents::AgentRole::ReasoningDistiller, prompt);
        out.usage = response.usage;
        out.reasoning = reasoning_from(response.text);
        std::string code;
        try {
            code = agents::extract_code_block(response.text);
        } catch (const ExtractionError&) {
            out.reasoning = response.text;  // keep everything we got
            out.classification = DistillClass::Errored;
            return out;
        }
        out.generated_code = code;
        out.classification = from_classification(classify(code, *record.reference_tb));
    } catch (const BackendError&) {
        out.classification = DistillClass::Errored;
    }
    return out;
}

std::pair<std::vector<DistillRecord>, RunStats> run_distillation(
    const std::vector<corpus::ProblemRecord>& records, agents::Backend& backend,
    const agents::PromptLibrary& prompts, const ClassifyFn& classify, const DistillConfig& cfg,
    int workers, const std::atomic<bool>* cancel) {
    for (const auto& record : records) {
        if (!record.reference_tb) {
            throw ValidationError("record '" + record.id +
                                  "': distillation input must have reference_tb (filter first)");
        }
    }

    auto start = std::chrono::steady_clock::now();
    std::vector<std::optional<DistillRecord>> slots(records.size());
    parallel_for(
        records.size(), workers,
        [&](std::size_t i) { slots[i] = distill_one(records[i], backend, prompts, classify, cfg); },
        cancel);

    std::vector<DistillRecord> out;
    RunStats stats;
    for (auto& slot : slots) {
        if (!slot) continue;
        ++stats.total;
        switch (slot->classification) {
            case DistillClass::Functional: ++stats.functional; break;
            case DistillClass::SyntacticOnly: ++stats.syntactic; break;
            case DistillClass::CompileError: ++stats.compile_error; break;
            case DistillClass::Errored: ++stats.errored; break;
        }
        stats.input_tokens += slot->usage.input_tokens;
        stats.output_tokens += slot->usage.output_tokens;
        out.push_back(std::move(*slot));
    }
    stats.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::uint64_t tokens = stats.input_tokens + stats.output_tokens;
    stats.throughput = (stats.elapsed > 0.0 && tokens > 0)
                           ? static_cast<double>(tokens) / stats.elapsed
                           : 0.0;
    validate_stats(stats);
    return {std::move(out), stats};
}

double compute_throughput(const agents::TokenUsage& usage_total, double elapsed_seconds) {
    if (elapsed_seconds <= 0.0) {
        throw DomainError("throughput requires elapsed > 0");
    }
    return static_cast<double>(usage_total.input_tokens + usage_total.output_tokens) /
           elapsed_seconds;
}

std::string_view sft_policy_name(SftPolicy policy) {
    return policy == SftPolicy::Functional ? "functional" : "all-compiling";
}

std::optional<SftPolicy> sft_policy_from_name(std::string_view name) {
    if (name == "functional") return SftPolicy::Functional;
    if (name == "all-compiling" || name == "all_compiling") return SftPolicy::AllCompiling;
    return std::nullopt;
}

std::vector<corpus::SftRecord> make_sft_records(const std::vector<corpus::ProblemRecord>& sources,
                                                const std::vector<DistillRecord>& records,
                                                SftPolicy policy, const std::string& provenance) {
    std::map<std::string, const corpus::ProblemRecord*> by_id;
    for (const auto& src : sources) by_id[src.id] = &src;

    std::vector<corpus::SftRecord> out;
    for (const auto& rec : records) {
        bool keep = rec.classification == DistillClass::Functional ||
                    (policy == SftPolicy::AllCompiling &&
                     rec.classification == DistillClass::SyntacticOnly);
        if (!keep || !rec.generated_code) continue;
        auto it = by_id.find(rec.problem_id);
        if (it == by_id.end()) {
            throw ValidationError("distill record '" + rec.problem_id + "' has no source record");
        }
        corpus::SftRecord sft;
        sft.instruction = it->second->spec;
        sft.response = rec.reasoning.empty()
                           ? "```verilog\n" + *rec.generated_code + "\n```\n"
                           : rec.reasoning + "\n```verilog\n" + *rec.generated_code + "\n```\n";
        sft.labels.classification = std::string(distill_class_name(rec.classification));
        sft.labels.provenance = provenance;
        out.push_back(std::move(sft));
    }
    return out;
}

} // namespace tbforge::distill
