#include "tbforge/pipeline.hpp"

#include "tbforge/errors.hpp"
#include "tbforge/worker_pool.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace tbforge::pipeline {

namespace {

constexpr std::string_view kWellWrittenVerdict = "WELL_WRITTEN";
constexpr std::size_t kFailureLogTailLines = 50;

struct StageInfo {
    StageId stage;
    std::string_view label;
    std::string_view key;
};

constexpr std::array<StageInfo, kStageCount> kStageTable = {{
    {StageId::InitTb, "Init testbench pass", "init_tb"},
    {StageId::Retry1, "1st retry pass", "retry1"},
    {StageId::Retry2, "2nd retry pass", "retry2"},
    {StageId::Retry3, "3rd retry pass", "retry3"},
    {StageId::RevisionInit, "Revision init", "revision_init"},
    {StageId::Retry4, "4th retry pass", "retry4"},
    {StageId::Retry5, "5th retry pass", "retry5"},
    {StageId::Retry6, "6th retry pass", "retry6"},
}};

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// Full failure logs can exceed model context limits; revisers get the tail.
std::string log_tail(const std::string& log) {
    std::size_t count = 0;
    std::size_t pos = log.size();
    while (pos > 0) {
        std::size_t prev = log.rfind('\n', pos - 1);
        ++count;
        if (count >= kFailureLogTailLines) {
            return prev == std::string::npos ? log : log.substr(prev + 1);
        }
        if (prev == std::string::npos) break;
        pos = prev;
    }
    return log;
}

// Shared state for one problem's walk through a state machine.
struct ProblemRun {
    const corpus::ProblemRecord& record;
    agents::Backend& backend;
    const agents::PromptLibrary& prompts;
    const VerifyFn& verify;

    PipelineResult result;
    std::string effective_spec;
    std::string previous_tb;
    std::string failure_log;
    StageId current_stage = StageId::InitTb;

    explicit ProblemRun(const corpus::ProblemRecord& rec, agents::Backend& be,
                        const agents::PromptLibrary& pl, const VerifyFn& vf)
        : record(rec), backend(be), prompts(pl), verify(vf) {
        result.problem_id = rec.id;
        effective_spec = rec.spec;
    }

    void event(std::string actor, StageId stage, std::string outcome) {
        result.transcript.push_back({std::move(actor), stage, std::move(outcome)});
    }

    // Consults the quality-check agent; keeps the original spec on a
    // WELL_WRITTEN verdict (or an empty reply).
    void refine_spec(StageId stage) {
        current_stage = stage;
        auto prompt = prompts.render(agents::AgentRole::QualityRefiner, record);
        auto response = backend.complete(agents::AgentRole::QualityRefiner, prompt);
        event(std::string(agents::role_name(agents::AgentRole::QualityRefiner)), stage, "ok");
        std::string text = trim(response.text);
        if (!text.empty() && text != kWellWrittenVerdict) {
            effective_spec = text;
            result.refined_spec = text;
        }
    }

    // One generate-or-revise attempt. Returns true when the testbench passed
    // verification at `stage`.
    bool attempt(agents::AgentRole role, StageId stage) {
        current_stage = stage;
        std::map<std::string, std::string> context{{"spec", effective_spec}};
        if (role == agents::AgentRole::TestbenchReviser) {
            context["previous_tb"] = previous_tb;
            context["failure_log"] = log_tail(failure_log);
        }
        auto prompt = prompts.render(role, record, context);
        auto response = backend.complete(role, prompt);

        std::string tb;
        try {
            tb = agents::extract_code_block(response.text);
        } catch (const ExtractionError&) {
            event(std::string(agents::role_name(role)), stage, "no_code");
            failure_log = "agent response contained no Verilog code block";
            return false;
        }
        event(std::string(agents::role_name(role)), stage, "ok");
        previous_tb = tb;

        harness::VerifyOutcome outcome = verify(record.golden_code, tb);
        event("verify", stage, std::string(harness::kind_name(outcome.kind)));
        if (outcome.kind == harness::VerifyKind::Pass) {
            result.succeeded = true;
            result.final_tb = tb;
            result.pass_stage = stage;
            return true;
        }
        failure_log = outcome.log;
        return false;
    }
};

PipelineResult errored_result(ProblemRun& run, const std::exception& error) {
    run.result.errored = true;
    run.result.succeeded = false;
    run.result.error_message = error.what();
    run.result.transcript.push_back({"backend", run.current_stage, "error"});
    return std::move(run.result);
}

} // namespace

std::string_view stage_label(StageId stage) {
    return kStageTable[static_cast<std::size_t>(stage)].label;
}

std::string_view stage_key(StageId stage) {
    return kStageTable[static_cast<std::size_t>(stage)].key;
}

std::optional<StageId> stage_from_key(std::string_view key) {
    for (const auto& info : kStageTable) {
        if (info.key == key) return info.stage;
    }
    return std::nullopt;
}

StageId retry_stage(int retry_index) {
    switch (retry_index) {
        case 1: return StageId::Retry1;
        case 2: return StageId::Retry2;
        case 3: return StageId::Retry3;
        case 4: return StageId::Retry4;
        case 5: return StageId::Retry5;
        case 6: return StageId::Retry6;
        default: throw ValidationError("retry index out of range: " + std::to_string(retry_index));
    }
}

std::string_view variant_name(PipelineVariant variant) {
    return variant == PipelineVariant::Baseline ? "baseline" : "pregen";
}

std::optional<PipelineVariant> variant_from_name(std::string_view name) {
    if (name == "baseline") return PipelineVariant::Baseline;
    if (name == "pregen" || name == "pregenerate") return PipelineVariant::Pregenerate;
    return std::nullopt;
}

void record_stage_pass(StageLedger& ledger, StageId stage) {
    ++ledger.pass_count[static_cast<std::size_t>(stage)];
    ++ledger.passed;
}

void validate_ledger(const StageLedger& ledger) {
    std::uint64_t sum = std::accumulate(ledger.pass_count.begin(), ledger.pass_count.end(),
                                        std::uint64_t{0});
    if (sum != ledger.passed) {
        throw ValidationError("ledger passed (" + std::to_string(ledger.passed) +
                              ") != sum of stage counts (" + std::to_string(sum) + ")");
    }
    if (ledger.passed + ledger.errored > ledger.attempted) {
        throw ValidationError("ledger passed+errored exceeds attempted");
    }
}

PipelineResult run_baseline(const corpus::ProblemRecord& record, agents::Backend& backend,
                            const agents::PromptLibrary& prompts, const VerifyFn& verify,
                            int budget) {
    if (budget < 0 || budget > 6) {
        throw ValidationError("baseline retry budget must be in [0, 6]");
    }
    corpus::validate_record(record);

    ProblemRun run(record, backend, prompts, verify);
    try {
        run.refine_spec(StageId::InitTb);
        if (run.attempt(agents::AgentRole::TestbenchWriter, StageId::InitTb)) {
            return std::move(run.result);
        }
        for (int i = 1; i <= budget; ++i) {
            if (run.attempt(agents::AgentRole::TestbenchReviser, retry_stage(i))) {
                return std::move(run.result);
            }
        }
    } catch (const BackendError& e) {
        return errored_result(run, e);
    }
    return std::move(run.result);
}

PipelineResult run_pregen(const corpus::ProblemRecord& record, agents::Backend& backend,
                          const agents::PromptLibrary& prompts, const VerifyFn& verify,
                          int pre_budget, int post_budget) {
    if (pre_budget < 0 || post_budget < 0 || pre_budget + post_budget > 6) {
        throw ValidationError("pregen budgets must be >= 0 with pre + post <= 6");
    }
    corpus::validate_record(record);

    ProblemRun run(record, backend, prompts, verify);
    try {
        // Phase A: testbench from the raw spec, before any refinement.
        if (run.attempt(agents::AgentRole::TestbenchWriter, StageId::InitTb)) {
            return std::move(run.result);
        }
        for (int i = 1; i <= pre_budget; ++i) {
            if (run.attempt(agents::AgentRole::TestbenchReviser, retry_stage(i))) {
                return std::move(run.result);
            }
        }
        // Phase B: refine the question, regenerate, revise again.
        run.refine_spec(StageId::RevisionInit);
        if (run.attempt(agents::AgentRole::TestbenchWriter, StageId::RevisionInit)) {
            return std::move(run.result);
        }
        for (int j = 1; j <= post_budget; ++j) {
            if (run.attempt(agents::AgentRole::TestbenchReviser, retry_stage(pre_budget + j))) {
                return std::move(run.result);
            }
        }
    } catch (const BackendError& e) {
        return errored_result(run, e);
    }
    return std::move(run.result);
}

RunOutcome run_batch(const std::vector<corpus::ProblemRecord>& records, PipelineVariant variant,
                     agents::Backend& backend, const agents::PromptLibrary& prompts,
                     const VerifyFn& verify, const Budgets& budgets, int workers,
                     const std::atomic<bool>* cancel) {
    std::vector<std::optional<PipelineResult>> slots(records.size());
    auto calls_before = backend.counter().calls;

    parallel_for(
        records.size(), workers,
        [&](std::size_t i) {
            slots[i] = variant == PipelineVariant::Baseline
                           ? run_baseline(records[i], backend, prompts, verify, budgets.baseline)
                           : run_pregen(records[i], backend, prompts, verify, budgets.pre,
                                        budgets.post);
        },
        cancel);

    RunOutcome outcome;
    for (auto& slot : slots) {
        if (!slot) continue;  // skipped after cancellation
        ++outcome.ledger.attempted;
        if (slot->errored) {
            ++outcome.ledger.errored;
        } else if (slot->succeeded && slot->pass_stage) {
            record_stage_pass(outcome.ledger, *slot->pass_stage);
        }
        outcome.results.push_back(std::move(*slot));
    }
    outcome.ledger.api_calls = backend.counter().calls - calls_before;
    validate_ledger(outcome.ledger);
    return outcome;
}

double round2(double x) { return std::llround(x * 100.0) / 100.0; }

AggregateReport aggregate_report(const std::vector<StageLedger>& runs, std::size_t n_runs,
                                 PipelineVariant variant) {
    if (runs.empty()) throw ValidationError("aggregate_report: no runs");
    if (runs.size() != n_runs) {
        throw ValidationError("aggregate_report: n_runs (" + std::to_string(n_runs) +
                              ") does not match ledger count (" + std::to_string(runs.size()) + ")");
    }
    for (const auto& ledger : runs) {
        validate_ledger(ledger);
        if (ledger.attempted != runs.front().attempted) {
            throw ValidationError("aggregate_report: runs processed unequal question batches");
        }
    }

    AggregateReport report;
    report.variant = variant;
    report.n_runs = n_runs;
    report.attempted_per_run = runs.front().attempted;
    const double n = static_cast<double>(n_runs);

    for (std::size_t s = 0; s < kStageCount; ++s) {
        std::uint64_t sum = 0;
        for (const auto& ledger : runs) sum += ledger.pass_count[s];
        report.mean_pass[s] = round2(static_cast<double>(sum) / n);
    }
    std::uint64_t total_passed = 0, total_api = 0, total_errored = 0;
    for (const auto& ledger : runs) {
        total_passed += ledger.passed;
        total_api += ledger.api_calls;
        total_errored += ledger.errored;
    }
    report.mean_total = round2(static_cast<double>(total_passed) / n);
    report.mean_api = round2(static_cast<double>(total_api) / n);
    report.mean_errored = round2(static_cast<double>(total_errored) / n);
    return report;
}

std::string render_report_table(const AggregateReport& report) {
    std::ostringstream out;
    char line[64];
    auto row = [&](std::string_view label, double value) {
        std::snprintf(line, sizeof(line), "%-22s %8.2f\n", std::string(label).c_str(), value);
        out << line;
    };

    std::snprintf(line, sizeof(line), "%-22s %8s\n", "Stage",
                  report.variant == PipelineVariant::Baseline ? "baseline" : "pregen");
    out << line;
    out << std::string(31, '-') << '\n';
    for (const auto& info : kStageTable) {
        if (info.stage == StageId::RevisionInit && report.variant == PipelineVariant::Baseline) {
            std::snprintf(line, sizeof(line), "%-22s %8s\n", std::string(info.label).c_str(), "--");
            out << line;
            continue;
        }
        row(info.label, report.mean_pass[static_cast<std::size_t>(info.stage)]);
    }
    out << std::string(31, '-') << '\n';
    row("Total #Pass", report.mean_total);
    row("API Count", report.mean_api);
    row("Errored", report.mean_errored);
    return out.str();
}

} // namespace tbforge::pipeline
