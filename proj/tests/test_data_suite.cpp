#include <doctest.h>

#include "support.hpp"
#include "tbforge/corpus.hpp"
#include "tbforge/evalrunner.hpp"
#include "tbforge/harness.hpp"

using namespace tbforge;
using testsupport::TempDir;

TEST_SUITE("data") {

TEST_CASE("the shipped synthetic eval suite is sound") {
    auto records = corpus::load_dataset(std::filesystem::path(TBFORGE_DATA_DIR) / "eval_suite.jsonl");
    REQUIRE(records.size() == 10);

    TempDir tmp("data-suite");
    auto cfg = testsupport::toolchain(tmp.path());
    for (const auto& rec : records) {
        CAPTURE(rec.id);
        REQUIRE(rec.reference_tb.has_value());
        CHECK(rec.meta.count("interface_stub") == 1);
        // Golden solutions must pass their own testbenches.
        CHECK(harness::classify(rec.golden_code, *rec.reference_tb, cfg) ==
              harness::Classification::Functional);
        CHECK_NOTHROW(evalrunner::eval_problem_from(rec));
    }
}

TEST_CASE("suite testbenches reject a broken implementation") {
    auto records = corpus::load_dataset(std::filesystem::path(TBFORGE_DATA_DIR) / "eval_suite.jsonl");
    TempDir tmp("data-suite");
    auto cfg = testsupport::toolchain(tmp.path());
    // An adder that subtracts must fail the adder testbench, not slip through.
    for (const auto& rec : records) {
        if (rec.id != "adder") continue;
        std::string broken = "module adder(input a, input b, output c, output s);\n"
                             "  assign {c, s} = a - b;\nendmodule\n";
        CHECK(harness::classify(broken, *rec.reference_tb, cfg) ==
              harness::Classification::SyntacticOnly);
    }
}

} // TEST_SUITE
