#include <doctest.h>

#include "support.hpp"
#include "tbforge/errors.hpp"
#include "tbforge/evalrunner.hpp"

#include <bit>
#include <random>

using namespace tbforge;
using namespace tbforge::evalrunner;
using agents::AgentRole;
using testsupport::fixture_text;

namespace {

// Independent oracle: enumerate every size-k subset of n samples (first c
// pass) and count subsets containing at least one passing sample.
double pass_at_k_bruteforce(int n, int c, int k) {
    long total = 0, hit = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != k) continue;
        ++total;
        if ((mask & ((1u << c) - 1)) != 0) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

EvalProblem adder_eval_problem(const std::string& id = "e1") {
    EvalProblem problem;
    problem.id = id;
    problem.spec = "One-bit full adder.";
    problem.reference_tb = fixture_text("adder_tb.v");
    return problem;
}

} // namespace

TEST_SUITE("evalrunner") {

TEST_CASE("pass_at_k matches the spec examples") {
    CHECK(pass_at_k(1, 1, 1) == doctest::Approx(1.0));
    CHECK(pass_at_k(5, 0, 3) == doctest::Approx(0.0));
    CHECK(pass_at_k(5, 2, 1) == doctest::Approx(0.4));
    CHECK(pass_at_k(4, 2, 2) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("pass_at_k rejects out-of-domain arguments") {
    CHECK_THROWS_AS(pass_at_k(3, 1, 4), DomainError);
    CHECK_THROWS_AS(pass_at_k(3, 4, 1), DomainError);
    CHECK_THROWS_AS(pass_at_k(3, -1, 1), DomainError);
    CHECK_THROWS_AS(pass_at_k(0, 0, 1), DomainError);
    CHECK_THROWS_AS(pass_at_k(3, 1, 0), DomainError);
}

TEST_CASE("estimator equals brute-force enumeration for all n <= 8") {
    for (int n = 1; n <= 8; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                CAPTURE(n);
                CAPTURE(c);
                CAPTURE(k);
                CHECK(pass_at_k(n, c, k) ==
                      doctest::Approx(pass_at_k_bruteforce(n, c, k)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("estimator boundaries and monotonicity") {
    for (int n = 1; n <= 8; ++n) {
        for (int k = 1; k <= n; ++k) {
            CHECK(pass_at_k(n, n, k) == doctest::Approx(1.0));
            CHECK(pass_at_k(n, 0, k) == doctest::Approx(0.0));
        }
        for (int c = 0; c < n; ++c) {
            for (int k = 1; k <= n; ++k) {
                CHECK(pass_at_k(n, c + 1, k) >= pass_at_k(n, c, k));
                if (k < n) CHECK(pass_at_k(n, c, k + 1) >= pass_at_k(n, c, k));
            }
        }
    }
}

TEST_CASE("sample_completions returns n entries in script order") {
    testsupport::SpyBackend backend;
    for (int i = 0; i < 5; ++i) {
        backend.queue(AgentRole::CodeGenerator,
                      testsupport::fenced("module m" + std::to_string(i) + "(); endmodule\n"));
    }
    auto prompts = agents::PromptLibrary::with_defaults();
    auto samples = sample_completions(adder_eval_problem(), 5, backend, prompts);
    REQUIRE(samples.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(samples[i].find("module m" + std::to_string(i)) != std::string::npos);
    }
}

TEST_CASE("prose and backend failures yield empty sources, never abort") {
    testsupport::SpyBackend backend;
    backend.queue(AgentRole::CodeGenerator, testsupport::fenced("module a(); endmodule\n"));
    backend.queue(AgentRole::CodeGenerator, "prose only");
    // Third sample exhausts the script: a BackendError surfaced per-sample.
    auto prompts = agents::PromptLibrary::with_defaults();
    auto samples = sample_completions(adder_eval_problem(), 3, backend, prompts);
    REQUIRE(samples.size() == 3);
    CHECK(!samples[0].empty());
    CHECK(samples[1].empty());
    CHECK(samples[2].empty());
}

TEST_CASE("interface stub is carried from record meta into the prompt") {
    corpus::ProblemRecord rec;
    rec.id = "p";
    rec.spec = "spec";
    rec.golden_code = "module g(); endmodule";
    rec.reference_tb = "module tb; endmodule";
    rec.meta["interface_stub"] = "module top(input clk);";
    auto problem = eval_problem_from(rec);
    CHECK(problem.interface_stub == "module top(input clk);");

    testsupport::SpyBackend backend;
    backend.queue(AgentRole::CodeGenerator, testsupport::fenced("module m(); endmodule\n"));
    auto prompts = agents::PromptLibrary::with_defaults();
    sample_completions(problem, 1, backend, prompts);
    CHECK(backend.prompts()[0].second.find("module top(input clk);") != std::string::npos);

    rec.reference_tb.reset();
    CHECK_THROWS_AS(eval_problem_from(rec), ValidationError);
}

TEST_CASE("run_eval aggregates the mean of per-problem estimates") {
    auto prompts = agents::PromptLibrary::with_defaults();
    distill::ClassifyFn classify = [](const std::string& code, const std::string&) {
        return code.find("GOOD") != std::string::npos ? harness::Classification::Functional
                                                      : harness::Classification::SyntacticOnly;
    };

    SUBCASE("two problems, c = 1 of 1 and 0 of 1, k=1 gives 50%") {
        testsupport::SpyBackend backend;
        backend.queue(AgentRole::CodeGenerator, testsupport::fenced("// GOOD\n"));
        backend.queue(AgentRole::CodeGenerator, testsupport::fenced("// BAD\n"));
        auto report = run_eval({adder_eval_problem("a"), adder_eval_problem("b")}, 1, {1},
                               backend, prompts, classify);
        CHECK(report.aggregate.at(1) == doctest::Approx(0.5));
    }

    SUBCASE("all passing gives 100% for every k") {
        testsupport::SpyBackend backend;
        for (int i = 0; i < 6; ++i) {
            backend.queue(AgentRole::CodeGenerator, testsupport::fenced("// GOOD\n"));
        }
        auto report = run_eval({adder_eval_problem("a"), adder_eval_problem("b")}, 3, {1, 2, 3},
                               backend, prompts, classify);
        for (int k : {1, 2, 3}) CHECK(report.aggregate.at(k) == doctest::Approx(1.0));
    }

    SUBCASE("ten problems with known c match the closed form and brute force") {
        std::vector<int> wanted_c = {0, 1, 2, 3, 4, 5, 0, 2, 5, 3};
        testsupport::SpyBackend backend;
        std::vector<EvalProblem> problems;
        for (std::size_t p = 0; p < wanted_c.size(); ++p) {
            problems.push_back(adder_eval_problem("p" + std::to_string(p)));
            for (int i = 0; i < 5; ++i) {
                backend.queue(AgentRole::CodeGenerator,
                              testsupport::fenced(i < wanted_c[p] ? "// GOOD\n" : "// BAD\n"));
            }
        }
        auto report = run_eval(problems, 5, {1, 3}, backend, prompts, classify);
        for (int k : {1, 3}) {
            double expected = 0.0;
            double low = 1.0, high = 0.0;
            for (int c : wanted_c) {
                double value = pass_at_k_bruteforce(5, c, k);
                expected += value;
                low = std::min(low, value);
                high = std::max(high, value);
            }
            expected /= static_cast<double>(wanted_c.size());
            CHECK(report.aggregate.at(k) == doctest::Approx(expected).epsilon(1e-12));
            CHECK(report.aggregate.at(k) >= low);
            CHECK(report.aggregate.at(k) <= high);
        }
        // Per-problem bookkeeping: c equals the Functional count.
        for (std::size_t p = 0; p < wanted_c.size(); ++p) {
            CHECK(report.outcomes[p].c == wanted_c[p]);
            CHECK(report.outcomes[p].per_sample.size() == 5);
        }
    }
}

TEST_CASE("eval table renders per-problem rows and a percent footer") {
    testsupport::SpyBackend backend;
    backend.queue(AgentRole::CodeGenerator, testsupport::fenced("// GOOD\n"));
    auto prompts = agents::PromptLibrary::with_defaults();
    distill::ClassifyFn classify = [](const std::string&, const std::string&) {
        return harness::Classification::Functional;
    };
    auto report = run_eval({adder_eval_problem("solo")}, 1, {1}, backend, prompts, classify);
    auto table = render_eval_table(report);
    CHECK(table.find("solo") != std::string::npos);
    CHECK(table.find("pass@1 (%): 100") != std::string::npos);
}

} // TEST_SUITE
