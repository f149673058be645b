#pragma once

#include "tbforge/agents.hpp"
#include "tbforge/corpus.hpp"
#include "tbforge/harness.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tbforge::pipeline {

// One ledger row per stage, in table row order. RevisionInit is reachable only
// in the Pregenerate variant.
enum class StageId {
    InitTb,
    Retry1,
    Retry2,
    Retry3,
    RevisionInit,
    Retry4,
    Retry5,
    Retry6,
};

inline constexpr std::size_t kStageCount = 8;

std::string_view stage_label(StageId stage);  // report row label
std::string_view stage_key(StageId stage);    // stable JSON key
std::optional<StageId> stage_from_key(std::string_view key);
StageId retry_stage(int retry_index);         // 1..6 -> Retry1..Retry6

enum class PipelineVariant { Baseline, Pregenerate };

std::string_view variant_name(PipelineVariant variant);
std::optional<PipelineVariant> variant_from_name(std::string_view name);

// Per-run counters mirroring one Table II/III column.
struct StageLedger {
    std::array<std::uint64_t, kStageCount> pass_count{};
    std::uint64_t api_calls = 0;
    std::uint64_t attempted = 0;
    std::uint64_t passed = 0;
    std::uint64_t errored = 0;  // backend failures, never counted as passed
};

void record_stage_pass(StageLedger& ledger, StageId stage);

// Enforces passed == sum(pass_count) and passed + errored <= attempted.
void validate_ledger(const StageLedger& ledger);

struct TranscriptEvent {
    std::string actor;    // agent role name, or "verify"
    StageId stage = StageId::InitTb;
    std::string outcome;  // agents: ok | no_code | error; verify: pass | sim_fail | ...

    bool operator==(const TranscriptEvent&) const = default;
};

struct PipelineResult {
    std::string problem_id;
    bool succeeded = false;
    bool errored = false;         // infrastructure failure, distinct from failed
    std::string error_message;
    std::optional<std::string> final_tb;
    std::optional<std::string> refined_spec;  // present only when the refiner rewrote it
    std::optional<StageId> pass_stage;
    std::vector<TranscriptEvent> transcript;
};

// Verification is injected so tests can pair the state machines with either
// the real harness or a synthetic verifier.
using VerifyFn = std::function<harness::VerifyOutcome(const std::string& module_src,
                                                      const std::string& tb_src)>;

// Fig. 2 machine: QualityRefiner -> TestbenchWriter -> verify, then up to
// `budget` reviser cycles each fed the prior failure log. RevisionInit is
// never recorded. budget must be in [0, 6].
PipelineResult run_baseline(const corpus::ProblemRecord& record, agents::Backend& backend,
                            const agents::PromptLibrary& prompts, const VerifyFn& verify,
                            int budget = 6);

// Fig. 3 machine: phase A writes a testbench from the raw spec (InitTb,
// Retry1..pre_budget); only when phase A exhausts does phase B refine the
// question and try again (RevisionInit, then Retry(pre_budget+1)..). Budgets
// must be >= 0 with pre + post <= 6.
PipelineResult run_pregen(const corpus::ProblemRecord& record, agents::Backend& backend,
                          const agents::PromptLibrary& prompts, const VerifyFn& verify,
                          int pre_budget = 3, int post_budget = 3);

struct Budgets {
    int baseline = 6;
    int pre = 3;
    int post = 3;
};

struct RunOutcome {
    std::vector<PipelineResult> results;
    StageLedger ledger;
};

// One named run: every record processed once under a bounded worker pool.
// api_calls is the backend counter delta across the batch. When `cancel`
// fires, unstarted problems are skipped and not counted as attempted.
RunOutcome run_batch(const std::vector<corpus::ProblemRecord>& records,
                     PipelineVariant variant, agents::Backend& backend,
                     const agents::PromptLibrary& prompts, const VerifyFn& verify,
                     const Budgets& budgets = {}, int workers = 1,
                     const std::atomic<bool>* cancel = nullptr);

// Averaged-run report in the shape of Tables II/III. Means are rounded to two
// decimals; Total #Pass is the rounded mean of per-run totals.
struct AggregateReport {
    PipelineVariant variant = PipelineVariant::Baseline;
    std::size_t n_runs = 0;
    std::uint64_t attempted_per_run = 0;
    std::array<double, kStageCount> mean_pass{};
    double mean_total = 0.0;
    double mean_api = 0.0;
    double mean_errored = 0.0;
};

// Throws ValidationError when runs is empty, n_runs != runs.size(), or the
// runs processed unequal batch sizes.
AggregateReport aggregate_report(const std::vector<StageLedger>& runs, std::size_t n_runs,
                                 PipelineVariant variant);

// Plain-text table matching the row labels of Tables II/III. Baseline reports
// render the Revision init row as "--".
std::string render_report_table(const AggregateReport& report);

double round2(double x);

} // namespace tbforge::pipeline
