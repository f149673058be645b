#include <doctest.h>

#include "support.hpp"
#include "tbforge/errors.hpp"
#include "tbforge/pipeline.hpp"

#include <random>

using namespace tbforge;
using namespace tbforge::pipeline;
using agents::AgentRole;
using testsupport::SpyBackend;

namespace {

const std::string kPassTb = testsupport::fenced("module tb; // PASS_TB\nendmodule\n");
const std::string kFailTb = testsupport::fenced("module tb; // FAIL_TB\nendmodule\n");

corpus::ProblemRecord problem(const std::string& id = "p1") {
    corpus::ProblemRecord rec;
    rec.id = id;
    rec.source = "pyranet";
    rec.spec = "Add two one-bit numbers.";
    rec.golden_code = "module adder(); endmodule";
    return rec;
}

// Synthetic verifier keyed by markers in the testbench text.
VerifyFn marker_verify() {
    return [](const std::string&, const std::string& tb) {
        harness::VerifyOutcome outcome;
        if (tb.find("PASS_TB") != std::string::npos) {
            outcome.kind = harness::VerifyKind::Pass;
            outcome.log = "$ sim\nTBFORGE_PASS";
        } else {
            outcome.kind = harness::VerifyKind::SimFail;
            outcome.log = "$ sim\nTBFORGE_FAIL: marker mismatch at t=40";
        }
        return outcome;
    };
}

void expect_transcript(const PipelineResult& result,
                       const std::vector<TranscriptEvent>& expected) {
    REQUIRE(result.transcript.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CAPTURE(i);
        CHECK(result.transcript[i].actor == expected[i].actor);
        CHECK(result.transcript[i].stage == expected[i].stage);
        CHECK(result.transcript[i].outcome == expected[i].outcome);
    }
}

int role_calls(const SpyBackend& backend, AgentRole role) {
    int count = 0;
    for (const auto& [r, prompt] : backend.prompts()) {
        if (r == role) ++count;
    }
    return count;
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("baseline: first testbench passes at InitTb") {
    SpyBackend backend;
    backend.queue(AgentRole::QualityRefiner, "WELL_WRITTEN");
    backend.queue(AgentRole::TestbenchWriter, kPassTb);
    auto prompts = agents::PromptLibrary::with_defaults();

    auto result = run_baseline(problem(), backend, prompts, marker_verify());
    CHECK(result.succeeded);
    CHECK(result.pass_stage == StageId::InitTb);
    CHECK(result.final_tb.has_value());
    CHECK(!result.refined_spec.has_value());  // verdict kept the original
    CHECK(backend.counter().calls == 2);
    expect_transcript(result, {{"QualityRefiner", StageId::InitTb, "ok"},
                               {"TestbenchWriter", StageId::InitTb, "ok"},
                               {"verify", StageId::InitTb, "pass"}});
}

TEST_CASE("baseline: passes on the second revision") {
    SpyBackend backend;
    backend.queue(AgentRole::QualityRefiner, "A clearer spec: add two bits with carry.");
    backend.queue(AgentRole::TestbenchWriter, kFailTb);
    backend.queue(AgentRole::TestbenchReviser, kFailTb);
    backend.queue(AgentRole::TestbenchReviser, kPassTb);
    auto prompts = agents::PromptLibrary::with_defaults();

    auto result = run_baseline(problem(), backend, prompts, marker_verify());
    CHECK(result.succeeded);
    CHECK(result.pass_stage == StageId::Retry2);
    REQUIRE(result.refined_spec.has_value());
    CHECK(*result.refined_spec == "A clearer spec: add two bits with carry.");
    CHECK(backend.counter().calls == 4);
    expect_transcript(result, {{"QualityRefiner", StageId::InitTb, "ok"},
                               {"TestbenchWriter", StageId::InitTb, "ok"},
                               {"verify", StageId::InitTb, "sim_fail"},
                               {"TestbenchReviser", StageId::Retry1, "ok"},
                               {"verify", StageId::Retry1, "sim_fail"},
                               {"TestbenchReviser", StageId::Retry2, "ok"},
                               {"verify", StageId::Retry2, "pass"}});

    // The writer saw the refined spec; the reviser saw the failure log tail.
    auto seen = backend.prompts();
    CHECK(seen[1].second.find("A clearer spec") != std::string::npos);
    CHECK(seen[2].second.find("TBFORGE_FAIL: marker mismatch at t=40") != std::string::npos);
}

TEST_CASE("baseline: budget exhaustion fails without a pass stage") {
    SpyBackend backend;
    backend.queue(AgentRole::QualityRefiner, "WELL_WRITTEN");
    backend.queue(AgentRole::TestbenchWriter, kFailTb);
    for (int i = 0; i < 6; ++i) backend.queue(AgentRole::TestbenchReviser, kFailTb);
    auto prompts = agents::PromptLibrary::with_defaults();

    auto result = run_baseline(problem(), backend, prompts, marker_verify());
    CHECK(!result.succeeded);
    CHECK(!result.pass_stage.has_value());
    CHECK(!result.final_tb.has_value());
    CHECK(!result.errored);
    CHECK(backend.counter().calls == 8);
    CHECK(role_calls(backend, AgentRole::TestbenchReviser) == 6);
}

TEST_CASE("pregen: raw-spec testbench passing skips the refiner entirely") {
    SpyBackend backend;
    backend.queue(AgentRole::TestbenchWriter, kPassTb);
    auto prompts = agents::PromptLibrary::with_defaults();

    auto result = run_pregen(problem(), backend, prompts, marker_verify());
    CHECK(result.pass_stage == StageId::InitTb);
    CHECK(backend.counter().calls == 1);
    CHECK(role_calls(backend, AgentRole::QualityRefiner) == 0);
    expect_transcript(result, {{"TestbenchWriter", StageId::InitTb, "ok"},
                               {"verify", StageId::InitTb, "pass"}});
}

TEST_CASE("pregen: refined-spec testbench passes at RevisionInit after phase A exhausts") {
    SpyBackend backend;
    backend.queue(AgentRole::TestbenchWriter, kFailTb);
    for (int i = 0; i < 3; ++i) backend.queue(AgentRole::TestbenchReviser, kFailTb);
    backend.queue(AgentRole::QualityRefiner, "Refined question.");
    backend.queue(AgentRole::TestbenchWriter, kPassTb);
    auto prompts = agents::PromptLibrary::with_defaults();

    auto result = run_pregen(problem(), backend, prompts, marker_verify());
    CHECK(result.pass_stage == StageId::RevisionInit);
    CHECK(backend.counter().calls == 6);
    expect_transcript(result, {{"TestbenchWriter", StageId::InitTb, "ok"},
                               {"verify", StageId::InitTb, "sim_fail"},
                               {"TestbenchReviser", StageId::Retry1, "ok"},
                               {"verify", StageId::Retry1, "sim_fail"},
                               {"TestbenchReviser", StageId::Retry2, "ok"},
                               {"verify", StageId::Retry2, "sim_fail"},
                               {"TestbenchReviser", StageId::Retry3, "ok"},
                               {"verify", StageId::Retry3, "sim_fail"},
                               {"QualityRefiner", StageId::RevisionInit, "ok"},
                               {"TestbenchWriter", StageId::RevisionInit, "ok"},
                               {"verify", StageId::RevisionInit, "pass"}});
}

TEST_CASE("pregen: passes on the fifth retry overall") {
    SpyBackend backend;
    backend.queue(AgentRole::TestbenchWriter, kFailTb);
    for (int i = 0; i < 3; ++i) backend.queue(AgentRole::TestbenchReviser, kFailTb);
    backend.queue(AgentRole::QualityRefiner, "WELL_WRITTEN");
    backend.queue(AgentRole::TestbenchWriter, kFailTb);
    backend.queue(AgentRole::TestbenchReviser, kFailTb);  // retry 4
    backend.queue(AgentRole::TestbenchReviser, kPassTb);  // retry 5
    auto prompts = agents::PromptLibrary::with_defaults();

    auto result = run_pregen(problem(), backend, prompts, marker_verify());
    CHECK(result.pass_stage == StageId::Retry5);
    CHECK(backend.counter().calls == 8);
}

TEST_CASE("writer reply without a code block becomes a consumed attempt") {
    SpyBackend backend;
    backend.queue(AgentRole::TestbenchWriter, "I could not produce a testbench, sorry.");
    backend.queue(AgentRole::TestbenchReviser, kPassTb);
    auto prompts = agents::PromptLibrary::with_defaults();

    auto result = run_pregen(problem(), backend, prompts, marker_verify());
    CHECK(result.pass_stage == StageId::Retry1);
    expect_transcript(result, {{"TestbenchWriter", StageId::InitTb, "no_code"},
                               {"TestbenchReviser", StageId::Retry1, "ok"},
                               {"verify", StageId::Retry1, "pass"}});
    // The reviser was told why the previous attempt failed.
    auto seen = backend.prompts();
    CHECK(seen[1].second.find("no Verilog code block") != std::string::npos);
}

TEST_CASE("backend errors mark the problem errored, never passed") {
    testsupport::FailingBackend backend;
    auto prompts = agents::PromptLibrary::with_defaults();
    auto result = run_baseline(problem(), backend, prompts, marker_verify());
    CHECK(result.errored);
    CHECK(!result.succeeded);
    CHECK(result.error_message.find("injected transport failure") != std::string::npos);

    auto outcome = run_batch({problem()}, PipelineVariant::Baseline, backend, prompts,
                             marker_verify());
    CHECK(outcome.ledger.attempted == 1);
    CHECK(outcome.ledger.errored == 1);
    CHECK(outcome.ledger.passed == 0);
}

TEST_CASE("a mid-retry backend failure is recorded at the stage it hit") {
    SpyBackend backend;
    backend.queue(AgentRole::TestbenchWriter, kFailTb);
    // No reviser responses queued: the first retry exhausts the script.
    auto prompts = agents::PromptLibrary::with_defaults();
    auto result = run_pregen(problem(), backend, prompts, marker_verify());
    CHECK(result.errored);
    REQUIRE(!result.transcript.empty());
    const auto& last = result.transcript.back();
    CHECK(last.actor == "backend");
    CHECK(last.stage == StageId::Retry1);
    CHECK(last.outcome == "error");
}

TEST_CASE("budget validation") {
    SpyBackend backend;
    auto prompts = agents::PromptLibrary::with_defaults();
    CHECK_THROWS_AS(run_baseline(problem(), backend, prompts, marker_verify(), 7),
                    ValidationError);
    CHECK_THROWS_AS(run_pregen(problem(), backend, prompts, marker_verify(), 4, 3),
                    ValidationError);
    CHECK_THROWS_AS(run_pregen(problem(), backend, prompts, marker_verify(), -1, 3),
                    ValidationError);
}

TEST_CASE("record_stage_pass updates the map and the total") {
    StageLedger ledger;
    record_stage_pass(ledger, StageId::InitTb);
    CHECK(ledger.pass_count[0] == 1);
    CHECK(ledger.passed == 1);

    ledger.pass_count[static_cast<std::size_t>(StageId::Retry2)] = 3;
    ledger.passed += 3;
    record_stage_pass(ledger, StageId::Retry2);
    CHECK(ledger.pass_count[static_cast<std::size_t>(StageId::Retry2)] == 4);

    std::mt19937 rng(5);
    StageLedger more;
    std::uniform_int_distribution<int> stage_dist(0, 7);
    for (int i = 0; i < 10; ++i) {
        record_stage_pass(more, static_cast<StageId>(stage_dist(rng)));
    }
    CHECK(more.passed == 10);
    more.attempted = 10;
    validate_ledger(more);
}

TEST_CASE("validate_ledger rejects inconsistent counters") {
    StageLedger ledger;
    ledger.passed = 1;  // no stage recorded
    ledger.attempted = 1;
    CHECK_THROWS_AS(validate_ledger(ledger), ValidationError);
}

TEST_CASE("aggregate_report validates and averages") {
    auto run_with = [](std::vector<std::uint64_t> counts, std::uint64_t api) {
        StageLedger ledger;
        for (std::size_t s = 0; s < counts.size(); ++s) {
            ledger.pass_count[s] = counts[s];
            ledger.passed += counts[s];
        }
        ledger.api_calls = api;
        ledger.attempted = 50;
        return ledger;
    };

    SUBCASE("single run reports raw counts") {
        auto report = aggregate_report({run_with({5, 3, 0, 0, 0, 0, 0, 0}, 100)}, 1,
                                       PipelineVariant::Baseline);
        CHECK(report.mean_pass[0] == doctest::Approx(5.0));
        CHECK(report.mean_total == doctest::Approx(8.0));
        CHECK(report.mean_api == doctest::Approx(100.0));
    }

    SUBCASE("13,13,14 averages to 13.33") {
        auto report = aggregate_report({run_with({13, 0, 0, 0, 0, 0, 0, 0}, 0),
                                        run_with({13, 0, 0, 0, 0, 0, 0, 0}, 0),
                                        run_with({14, 0, 0, 0, 0, 0, 0, 0}, 0)},
                                       3, PipelineVariant::Baseline);
        CHECK(report.mean_pass[0] == doctest::Approx(13.33));
    }

    SUBCASE("n_runs mismatch is a validation error") {
        CHECK_THROWS_AS(aggregate_report({run_with({1, 0, 0, 0, 0, 0, 0, 0}, 0)}, 2,
                                         PipelineVariant::Baseline),
                        ValidationError);
    }

    SUBCASE("unequal batch sizes are rejected") {
        auto a = run_with({1, 0, 0, 0, 0, 0, 0, 0}, 0);
        auto b = run_with({1, 0, 0, 0, 0, 0, 0, 0}, 0);
        b.attempted = 49;
        CHECK_THROWS_AS(aggregate_report({a, b}, 2, PipelineVariant::Baseline), ValidationError);
    }
}

TEST_CASE("report table renders paper row labels, '--' for baseline revision row") {
    StageLedger ledger;
    ledger.attempted = 50;
    record_stage_pass(ledger, StageId::InitTb);

    auto revision_row = [](const std::string& table) {
        auto start = table.find("Revision init");
        REQUIRE(start != std::string::npos);
        auto end = table.find('\n', start);
        return table.substr(start, end - start);
    };

    auto baseline = render_report_table(aggregate_report({ledger}, 1, PipelineVariant::Baseline));
    CHECK(baseline.find("Init testbench pass") != std::string::npos);
    CHECK(baseline.find("1st retry pass") != std::string::npos);
    CHECK(baseline.find("Total #Pass") != std::string::npos);
    CHECK(baseline.find("API Count") != std::string::npos);
    CHECK(revision_row(baseline).find("--") != std::string::npos);

    auto pregen = render_report_table(aggregate_report({ledger}, 1, PipelineVariant::Pregenerate));
    CHECK(revision_row(pregen).find("--") == std::string::npos);
    CHECK(revision_row(pregen).find("0.00") != std::string::npos);
}

TEST_CASE("randomized runs: budgets, stage exclusivity, variant reachability, call accounting") {
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> coin(0, 1);

    for (int round = 0; round < 40; ++round) {
        bool baseline = coin(rng) == 1;
        SpyBackend backend;
        // Oversupply responses so budgets, not the script, end the machine.
        backend.queue(AgentRole::QualityRefiner, coin(rng) ? "WELL_WRITTEN" : "refined text");
        for (int i = 0; i < 3; ++i) {
            backend.queue(AgentRole::TestbenchWriter, coin(rng) ? kPassTb : kFailTb);
        }
        for (int i = 0; i < 8; ++i) {
            backend.queue(AgentRole::TestbenchReviser, coin(rng) ? kPassTb : kFailTb);
        }
        auto prompts = agents::PromptLibrary::with_defaults();

        auto result = baseline ? run_baseline(problem(), backend, prompts, marker_verify())
                               : run_pregen(problem(), backend, prompts, marker_verify());

        int writers = role_calls(backend, AgentRole::TestbenchWriter);
        int revisers = role_calls(backend, AgentRole::TestbenchReviser);
        int refiners = role_calls(backend, AgentRole::QualityRefiner);
        CHECK(refiners <= 1);
        if (baseline) {
            CHECK(writers + revisers <= 1 + 6);
        } else {
            CHECK(writers + revisers <= 2 + 6);
        }

        int passes = 0;
        for (const auto& event : result.transcript) {
            if (event.actor == "verify" && event.outcome == "pass") ++passes;
            if (baseline) CHECK(event.stage != StageId::RevisionInit);
        }
        CHECK(passes <= 1);
        CHECK(result.succeeded == (passes == 1));
        CHECK(backend.counter().calls == backend.consumed());
    }
}

TEST_CASE("run_batch under a worker pool keeps the ledger consistent") {
    // Live-style backend (not a sequence-keyed script): safe to run wide.
    class AlwaysPass final : public agents::Backend {
    protected:
        agents::AgentResponse do_complete(AgentRole role, const std::string&) override {
            agents::AgentResponse response;
            response.text = role == AgentRole::QualityRefiner ? "WELL_WRITTEN" : kPassTb;
            return response;
        }
    };
    AlwaysPass backend;
    auto prompts = agents::PromptLibrary::with_defaults();
    std::vector<corpus::ProblemRecord> records;
    for (int i = 0; i < 16; ++i) records.push_back(problem("p" + std::to_string(i)));

    auto outcome = run_batch(records, PipelineVariant::Pregenerate, backend, prompts,
                             marker_verify(), {}, 8);
    CHECK(outcome.ledger.attempted == 16);
    CHECK(outcome.ledger.passed == 16);
    CHECK(outcome.ledger.pass_count[0] == 16);
    CHECK(outcome.ledger.api_calls == 16);  // one writer call per problem
    CHECK(outcome.results.size() == 16);
}

} // TEST_SUITE
