#include "tbforge/evalrunner.hpp"

#include "tbforge/errors.hpp"
#include "tbforge/worker_pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace tbforge::evalrunner {

EvalProblem eval_problem_from(const corpus::ProblemRecord& record) {
    if (!record.reference_tb) {
        throw ValidationError("record '" + record.id + "': evaluation requires a reference testbench");
    }
    EvalProblem problem;
    problem.id = record.id;
    problem.spec = record.spec;
    problem.reference_tb = *record.reference_tb;
    if (auto it = record.meta.find("interface_stub"); it != record.meta.end()) {
        problem.interface_stub = it->second;
    }
    return problem;
}

std::vector<std::string> sample_completions(const EvalProblem& problem, int n,
                                            agents::Backend& backend,
                                            const agents::PromptLibrary& prompts,
                                            std::size_t* backend_errors) {
    if (n < 1) throw DomainError("sample count must be >= 1");

    corpus::ProblemRecord shim;
    shim.id = problem.id;
    shim.spec = problem.spec;
    shim.golden_code = "-";  // generator prompts never reference the solution

    std::map<std::string, std::string> context;
    context["interface_section"] =
        problem.interface_stub.empty()
            ? ""
            : "\nModule interface:\n```verilog\n" + problem.interface_stub + "\n```\n";

    std::vector<std::string> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::string code;
        try {
            auto prompt = prompts.render(agents::AgentRole::CodeGenerator, shim, context);
            auto response = backend.complete(agents::AgentRole::CodeGenerator, prompt);
            code = agents::extract_code_block(response.text);
        } catch (const ExtractionError&) {
            code.clear();  // empty source classifies CompileError downstream
        } catch (const BackendError&) {
            code.clear();
            if (backend_errors) ++*backend_errors;
        }
        samples.push_back(std::move(code));
    }
    return samples;
}

double pass_at_k(int n, int c, int k) {
    if (n < 1 || k < 1 || k > n || c < 0 || c > n) {
        throw DomainError("pass_at_k requires 1 <= k <= n and 0 <= c <= n");
    }
    if (n - c < k) return 1.0;
    // 1 - C(n-c, k)/C(n, k) in product form; raw factorials overflow fast.
    double miss = 1.0;
    for (int i = 0; i < k; ++i) {
        miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    }
    return 1.0 - miss;
}

EvalReport run_eval(const std::vector<EvalProblem>& problems, int n,
                    const std::vector<int>& k_list, agents::Backend& backend,
                    const agents::PromptLibrary& prompts, const distill::ClassifyFn& classify,
                    int workers, const std::atomic<bool>* cancel) {
    if (problems.empty()) throw ValidationError("run_eval: no problems");
    if (n < 1) throw DomainError("run_eval: n must be >= 1");
    for (int k : k_list) {
        if (k < 1 || k > n) throw DomainError("run_eval: every k must satisfy 1 <= k <= n");
    }

    EvalReport report;
    report.n = n;
    report.k_list = k_list;
    report.outcomes.resize(problems.size());
    std::atomic<std::size_t> backend_errors{0};

    parallel_for(
        problems.size(), workers,
        [&](std::size_t i) {
            const EvalProblem& problem = problems[i];
            EvalOutcome outcome;
            outcome.problem_id = problem.id;
            outcome.n = n;
            std::size_t sample_errors = 0;
            auto samples = sample_completions(problem, n, backend, prompts, &sample_errors);
            backend_errors.fetch_add(sample_errors, std::memory_order_relaxed);
            for (const auto& code : samples) {
                harness::Classification cls =
                    code.empty() ? harness::Classification::CompileError
                                 : classify(code, problem.reference_tb);
                outcome.per_sample.push_back(cls);
                if (cls == harness::Classification::Functional) ++outcome.c;
            }
            report.outcomes[i] = std::move(outcome);
        },
        cancel);

    // Drop slots skipped by cancellation.
    report.outcomes.erase(std::remove_if(report.outcomes.begin(), report.outcomes.end(),
                                         [](const EvalOutcome& o) { return o.n == 0; }),
                          report.outcomes.end());
    report.backend_errors = backend_errors.load();

    for (int k : k_list) {
        double sum = 0.0;
        for (const auto& outcome : report.outcomes) {
            sum += pass_at_k(outcome.n, outcome.c, k);
        }
        report.aggregate[k] =
            report.outcomes.empty() ? 0.0 : sum / static_cast<double>(report.outcomes.size());
    }
    return report;
}

std::string render_eval_table(const EvalReport& report) {
    std::ostringstream out;
    char line[160];
    std::ostringstream header;
    header << "problem          n    c";
    for (int k : report.k_list) header << "  pass@" << k;
    out << header.str() << '\n';
    out << std::string(header.str().size(), '-') << '\n';
    for (const auto& outcome : report.outcomes) {
        std::snprintf(line, sizeof(line), "%-14s %4d %4d", outcome.problem_id.c_str(), outcome.n,
                      outcome.c);
        out << line;
        for (int k : report.k_list) {
            std::snprintf(line, sizeof(line), "   %.4f", pass_at_k(outcome.n, outcome.c, k));
            out << line;
        }
        out << '\n';
    }
    out << std::string(header.str().size(), '-') << '\n';
    for (int k : report.k_list) {
        double value = report.aggregate.count(k) ? report.aggregate.at(k) : 0.0;
        std::snprintf(line, sizeof(line), "pass@%d (%%): %.0f\n", k, value * 100.0);
        out << line;
    }
    return out.str();
}

} // namespace tbforge::evalrunner
