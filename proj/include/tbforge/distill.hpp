#pragma once

#include "tbforge/agents.hpp"
#include "tbforge/corpus.hpp"
#include "tbforge/harness.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tbforge::distill {

// The paper's three classes plus Errored for infrastructure failures, which
// are reported separately and never folded into the three.
enum class DistillClass { Functional, SyntacticOnly, CompileError, Errored };

std::string_view distill_class_name(DistillClass c);
DistillClass from_classification(harness::Classification c);

struct DistillRecord {
    std::string problem_id;
    std::string reasoning;
    std::optional<std::string> generated_code;  // absent on extraction failure
    DistillClass classification = DistillClass::Errored;
    agents::TokenUsage usage;
};

struct RunStats {
    std::uint64_t total = 0;
    std::uint64_t functional = 0;
    std::uint64_t syntactic = 0;
    std::uint64_t compile_error = 0;
    std::uint64_t errored = 0;
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
    double elapsed = 0.0;     // wall time of the whole batch, seconds
    double throughput = 0.0;  // tokens/second; 0 when elapsed is 0
};

// Partition law: functional + syntactic + compile_error + errored == total.
// Throws ValidationError when violated.
void validate_stats(const RunStats& stats);

struct DistillConfig {
    bool show_golden = true;  // include the golden solution in the distiller prompt
};

using ClassifyFn = std::function<harness::Classification(const std::string& generated_code,
                                                         const std::string& reference_tb)>;

// Prompts the ReasoningDistiller with the record's spec (and golden code per
// config), splits reasoning from the final code block, and classifies the code
// against the reference testbench. Extraction and backend failures produce an
// Errored record with whatever reasoning text was captured.
DistillRecord distill_one(const corpus::ProblemRecord& record, agents::Backend& backend,
                          const agents::PromptLibrary& prompts, const ClassifyFn& classify,
                          const DistillConfig& cfg = {});

// One DistillRecord per input, produced concurrently under a bounded worker
// pool. Every input must carry a reference testbench (filter first).
std::pair<std::vector<DistillRecord>, RunStats> run_distillation(
    const std::vector<corpus::ProblemRecord>& records, agents::Backend& backend,
    const agents::PromptLibrary& prompts, const ClassifyFn& classify,
    const DistillConfig& cfg = {}, int workers = 1,
    const std::atomic<bool>* cancel = nullptr);

// (input + output) / elapsed. Throws DomainError when elapsed <= 0.
double compute_throughput(const agents::TokenUsage& usage_total, double elapsed_seconds);

// Which classes become SFT training records: Functional only, or everything
// that compiled (the paper's two dataset variants).
enum class SftPolicy { Functional, AllCompiling };

std::string_view sft_policy_name(SftPolicy policy);
std::optional<SftPolicy> sft_policy_from_name(std::string_view name);

// Pairs distill outputs with their source records (matched by problem id) and
// emits SFT records under the policy. The response is the reasoning trace
// followed by the code in a fenced block.
std::vector<corpus::SftRecord> make_sft_records(
    const std::vector<corpus::ProblemRecord>& sources,
    const std::vector<DistillRecord>& records, SftPolicy policy,
    const std::string& provenance = "distillation");

} // namespace tbforge::distill
