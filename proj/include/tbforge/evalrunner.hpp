#pragma once

#include "tbforge/agents.hpp"
#include "tbforge/corpus.hpp"
#include "tbforge/distill.hpp"
#include "tbforge/harness.hpp"

#include <atomic>
#include <map>
#include <string>
#include <vector>

namespace tbforge::evalrunner {

struct EvalProblem {
    std::string id;
    std::string spec;
    std::string reference_tb;     // required
    std::string interface_stub;   // optional module header shown to the generator
};

// Built from the shared ProblemRecord file format; reference_tb is required,
// interface_stub comes from meta["interface_stub"] when present.
EvalProblem eval_problem_from(const corpus::ProblemRecord& record);

struct EvalOutcome {
    std::string problem_id;
    int n = 0;  // samples drawn
    int c = 0;  // samples classified Functional
    std::vector<harness::Classification> per_sample;
};

// n independent CodeGenerator completions, each code-extracted. Extraction
// failures and per-sample agent errors yield an empty source (which then
// classifies CompileError); they never abort the batch. When backend_errors
// is non-null it receives the number of samples lost to agent errors.
std::vector<std::string> sample_completions(const EvalProblem& problem, int n,
                                            agents::Backend& backend,
                                            const agents::PromptLibrary& prompts,
                                            std::size_t* backend_errors = nullptr);

// Unbiased estimator 1 - C(n-c, k)/C(n, k), evaluated in product form for
// numerical stability; 1 when n-c < k. Throws DomainError unless
// 1 <= k <= n and 0 <= c <= n.
double pass_at_k(int n, int c, int k);

struct EvalReport {
    int n = 0;
    std::vector<int> k_list;
    std::vector<EvalOutcome> outcomes;
    std::map<int, double> aggregate;   // k -> mean over problems of pass_at_k
    std::size_t backend_errors = 0;    // samples lost to agent transport failures
};

// Samples, classifies against each problem's reference testbench, and
// aggregates pass@k over problems.
EvalReport run_eval(const std::vector<EvalProblem>& problems, int n,
                    const std::vector<int>& k_list, agents::Backend& backend,
                    const agents::PromptLibrary& prompts,
                    const distill::ClassifyFn& classify, int workers = 1,
                    const std::atomic<bool>* cancel = nullptr);

// Per-problem rows plus an aggregate footer; percentages with 0 decimals.
std::string render_eval_table(const EvalReport& report);

} // namespace tbforge::evalrunner
