#include <doctest.h>

#include "support.hpp"
#include "tbforge/distill.hpp"
#include "tbforge/errors.hpp"
#include "tbforge/harness.hpp"

using namespace tbforge;
using namespace tbforge::distill;
using agents::AgentRole;
using testsupport::fixture_text;
using testsupport::TempDir;

namespace {

corpus::ProblemRecord adder_problem(const std::string& id = "adder-1") {
    corpus::ProblemRecord rec;
    rec.id = id;
    rec.source = "pyranet";
    rec.spec = "One-bit full adder with carry out.";
    rec.golden_code = fixture_text("adder_correct.v");
    rec.reference_tb = fixture_text("adder_tb.v");
    return rec;
}

std::string reasoned(const std::string& code) {
    return "First I consider the truth table.\nThen I write the module.\n" +
           testsupport::fenced(code);
}

} // namespace

TEST_SUITE("distill") {

TEST_CASE("distill_one classifies against the reference testbench") {
    TempDir tmp("distill");
    auto tool = testsupport::toolchain(tmp.path());
    ClassifyFn classify = [&](const std::string& code, const std::string& tb) {
        return harness::classify(code, tb, tool);
    };
    auto prompts = agents::PromptLibrary::with_defaults();

    SUBCASE("correct code is Functional, reasoning split off") {
        testsupport::SpyBackend backend;
        backend.queue(AgentRole::ReasoningDistiller, reasoned(fixture_text("adder_correct.v")));
        auto record = distill_one(adder_problem(), backend, prompts, classify);
        CHECK(record.classification == DistillClass::Functional);
        REQUIRE(record.generated_code.has_value());
        CHECK(record.reasoning.find("truth table") != std::string::npos);
        CHECK(record.reasoning.find("module adder") == std::string::npos);
        // Default config shows the golden solution to the distiller.
        auto seen = backend.prompts();
        CHECK(seen[0].second.find("Golden solution") != std::string::npos);
    }

    SUBCASE("compiling-but-wrong code is SyntacticOnly") {
        testsupport::SpyBackend backend;
        backend.queue(AgentRole::ReasoningDistiller, reasoned(fixture_text("adder_wrong.v")));
        auto record = distill_one(adder_problem(), backend, prompts, classify);
        CHECK(record.classification == DistillClass::SyntacticOnly);
    }

    SUBCASE("prose-only reply is Errored with reasoning retained") {
        testsupport::SpyBackend backend;
        backend.queue(AgentRole::ReasoningDistiller, "I cannot write code today.");
        auto record = distill_one(adder_problem(), backend, prompts, classify);
        CHECK(record.classification == DistillClass::Errored);
        CHECK(!record.generated_code.has_value());
        CHECK(record.reasoning == "I cannot write code today.");
    }

    SUBCASE("golden solution can be withheld") {
        testsupport::SpyBackend backend;
        backend.queue(AgentRole::ReasoningDistiller, reasoned(fixture_text("adder_correct.v")));
        DistillConfig cfg;
        cfg.show_golden = false;
        distill_one(adder_problem(), backend, prompts, classify, cfg);
        CHECK(backend.prompts()[0].second.find("Golden solution") == std::string::npos);
    }
}

TEST_CASE("think tags unwrap into the reasoning field") {
    TempDir tmp("distill");
    auto tool = testsupport::toolchain(tmp.path());
    ClassifyFn classify = [&](const std::string& code, const std::string& tb) {
        return harness::classify(code, tb, tool);
    };
    testsupport::SpyBackend backend;
    backend.queue(AgentRole::ReasoningDistiller,
                  "<think>carry is a AND b</think>\n" + testsupport::fenced(fixture_text("adder_correct.v")));
    auto prompts = agents::PromptLibrary::with_defaults();
    auto record = distill_one(adder_problem(), backend, prompts, classify);
    CHECK(record.reasoning == "carry is a AND b");
}

TEST_CASE("run_distillation produces one record per input and a valid partition") {
    TempDir tmp("distill");
    auto tool = testsupport::toolchain(tmp.path());
    ClassifyFn classify = [&](const std::string& code, const std::string& tb) {
        return harness::classify(code, tb, tool);
    };
    auto prompts = agents::PromptLibrary::with_defaults();

    testsupport::SpyBackend backend;
    backend.queue(AgentRole::ReasoningDistiller, reasoned(fixture_text("adder_correct.v")));
    backend.queue(AgentRole::ReasoningDistiller, reasoned(fixture_text("adder_wrong.v")));
    backend.queue(AgentRole::ReasoningDistiller, reasoned(fixture_text("adder_syntax_error.v")));

    std::vector<corpus::ProblemRecord> records = {adder_problem("a"), adder_problem("b"),
                                                  adder_problem("c")};
    auto [distilled, stats] = run_distillation(records, backend, prompts, classify);
    CHECK(distilled.size() == 3);
    CHECK(stats.total == 3);
    CHECK(stats.functional == 1);
    CHECK(stats.syntactic == 1);
    CHECK(stats.compile_error == 1);
    CHECK(stats.errored == 0);
    CHECK(stats.input_tokens > 0);
    CHECK(stats.output_tokens > 0);
}

TEST_CASE("empty input gives all-zero stats with zero throughput") {
    testsupport::SpyBackend backend;
    auto prompts = agents::PromptLibrary::with_defaults();
    ClassifyFn classify = [](const std::string&, const std::string&) {
        return harness::Classification::Functional;
    };
    auto [distilled, stats] = run_distillation({}, backend, prompts, classify);
    CHECK(distilled.empty());
    CHECK(stats.total == 0);
    CHECK(stats.throughput == 0.0);
}

TEST_CASE("records without testbenches are rejected up front") {
    testsupport::SpyBackend backend;
    auto prompts = agents::PromptLibrary::with_defaults();
    ClassifyFn classify = [](const std::string&, const std::string&) {
        return harness::Classification::Functional;
    };
    auto rec = adder_problem();
    rec.reference_tb.reset();
    CHECK_THROWS_AS(run_distillation({rec}, backend, prompts, classify), ValidationError);
}

TEST_CASE("partition validator accepts the consistent triple and rejects perturbations") {
    RunStats stats;
    stats.total = 6704;
    stats.functional = 1386;
    stats.syntactic = 4421;
    stats.compile_error = 897;
    stats.errored = 0;
    CHECK_NOTHROW(validate_stats(stats));

    auto perturbed = stats;
    perturbed.total = 6705;
    CHECK_THROWS_AS(validate_stats(perturbed), ValidationError);
    perturbed = stats;
    perturbed.functional += 1;
    CHECK_THROWS_AS(validate_stats(perturbed), ValidationError);
}

TEST_CASE("compute_throughput is total tokens over elapsed") {
    CHECK(compute_throughput({1000, 9000}, 10.0) == doctest::Approx(1000.0));
    CHECK(compute_throughput({0, 0}, 5.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(compute_throughput({1, 1}, 0.0), DomainError);
    CHECK_THROWS_AS(compute_throughput({1, 1}, -1.0), DomainError);
}

TEST_CASE("throughput strictly decreases as elapsed grows") {
    agents::TokenUsage usage{5000, 15000};
    double last = compute_throughput(usage, 1.0);
    for (double elapsed : {2.0, 4.0, 8.0, 100.0}) {
        double now = compute_throughput(usage, elapsed);
        CHECK(now < last);
        last = now;
    }
}

TEST_CASE("sft policy controls which classes are emitted") {
    std::vector<corpus::ProblemRecord> sources = {adder_problem("a"), adder_problem("b"),
                                                  adder_problem("c")};
    std::vector<DistillRecord> records(3);
    records[0] = {"a", "r", fixture_text("adder_correct.v"), DistillClass::Functional, {}};
    records[1] = {"b", "r", fixture_text("adder_wrong.v"), DistillClass::SyntacticOnly, {}};
    records[2] = {"c", "r", std::nullopt, DistillClass::Errored, {}};

    auto functional = make_sft_records(sources, records, SftPolicy::Functional);
    auto all_compiling = make_sft_records(sources, records, SftPolicy::AllCompiling);
    CHECK(functional.size() == 1);
    CHECK(all_compiling.size() == 2);
    CHECK(functional.size() <= all_compiling.size());
    CHECK(functional[0].labels.classification == "functional");
    CHECK(functional[0].labels.provenance == "distillation");
    CHECK(functional[0].instruction == sources[0].spec);
    CHECK_NOTHROW(agents::extract_code_block(functional[0].response));

    TempDir tmp("distill");
    auto manifest = corpus::write_sft_dataset(all_compiling, tmp.path() / "sft.jsonl");
    CHECK(manifest.record_count == 2);
}

TEST_CASE("functional records re-verify as Pass") {
    TempDir tmp("distill");
    auto tool = testsupport::toolchain(tmp.path());
    ClassifyFn classify = [&](const std::string& code, const std::string& tb) {
        return harness::classify(code, tb, tool);
    };
    auto prompts = agents::PromptLibrary::with_defaults();

    testsupport::SpyBackend backend;
    backend.queue(AgentRole::ReasoningDistiller, reasoned(fixture_text("adder_correct.v")));
    auto record = distill_one(adder_problem(), backend, prompts, classify);
    REQUIRE(record.classification == DistillClass::Functional);
    auto outcome = harness::verify(*record.generated_code, fixture_text("adder_tb.v"), tool);
    CHECK(outcome.kind == harness::VerifyKind::Pass);
}

} // TEST_SUITE
