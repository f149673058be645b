// tbforge: batch pipeline for generating, verifying, and curating Verilog
// testbenches and fine-tuning records with role-specialized LLM agents.
// Subcommands: gen-tb, distill, eval, report.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tbforge/agents.hpp"
#include "tbforge/corpus.hpp"
#include "tbforge/distill.hpp"
#include "tbforge/errors.hpp"
#include "tbforge/evalrunner.hpp"
#include "tbforge/harness.hpp"
#include "tbforge/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

void handle_interrupt(int) { g_interrupted.store(true); }

void install_signal_handler() {
    struct sigaction action{};
    action.sa_handler = handle_interrupt;
    sigemptyset(&action.sa_mask);
    sigaction(SIGINT, &action, nullptr);
    sigaction(SIGTERM, &action, nullptr);
}

struct Options {
    std::string dataset;
    std::string config_file;
    std::string variant = "pregen";
    int budget = 6;
    int pre_budget = 3;
    int post_budget = 3;
    int runs = 1;
    int workers = 4;
    std::string script;
    std::string endpoint;
    std::string model;
    std::string prompts_dir;
    std::string policy = "functional";
    int n = 1;
    std::string k_csv = "1";
    long seed = 0;
    std::string out_dir = "tbforge-out";
    std::string iverilog;
    std::string vvp;
    double compile_timeout = 30.0;
    double sim_timeout = 60.0;
    bool require_tb = false;
    bool workers_explicit = false;
    std::vector<std::string> sources;
    std::string report_input;  // report subcommand
};

// Config file value applies only when the flag was not passed on the line.
void apply_config_file(const CLI::App& cmd, Options& opt) {
    if (opt.config_file.empty()) return;
    std::ifstream in(opt.config_file);
    if (!in) throw tbforge::ConfigError("cannot open config file: " + opt.config_file);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::parse_error& e) {
        throw tbforge::ConfigError("malformed config file: " + std::string(e.what()));
    }

    auto unset = [&](const std::string& flag) {
        auto* option = cmd.get_option_no_throw(flag);
        return option == nullptr || option->count() == 0;
    };
    auto load_str = [&](const char* key, const std::string& flag, std::string& out) {
        if (cfg.contains(key) && unset(flag)) out = cfg[key].get<std::string>();
    };
    auto load_int = [&](const char* key, const std::string& flag, int& out) {
        if (cfg.contains(key) && unset(flag)) out = cfg[key].get<int>();
    };
    auto load_double = [&](const char* key, const std::string& flag, double& out) {
        if (cfg.contains(key) && unset(flag)) out = cfg[key].get<double>();
    };

    load_str("variant", "--variant", opt.variant);
    load_int("budget", "--budget", opt.budget);
    load_int("pre_budget", "--pre-budget", opt.pre_budget);
    load_int("post_budget", "--post-budget", opt.post_budget);
    load_int("runs", "--runs", opt.runs);
    load_int("workers", "--workers", opt.workers);
    load_str("script", "--script", opt.script);
    load_str("endpoint", "--endpoint", opt.endpoint);
    load_str("model", "--model", opt.model);
    load_str("prompts", "--prompts", opt.prompts_dir);
    load_str("policy", "--policy", opt.policy);
    load_int("n", "--n", opt.n);
    load_str("k", "--k", opt.k_csv);
    load_str("out", "--out", opt.out_dir);
    load_str("iverilog", "--iverilog", opt.iverilog);
    load_str("vvp", "--vvp", opt.vvp);
    load_double("compile_timeout", "--compile-timeout", opt.compile_timeout);
    load_double("sim_timeout", "--sim-timeout", opt.sim_timeout);
    if (cfg.contains("seed") && unset("--seed")) opt.seed = cfg["seed"].get<long>();
}

void add_common_flags(CLI::App* cmd, Options& opt, bool wants_dataset) {
    if (wants_dataset) {
        cmd->add_option("--dataset", opt.dataset, "line-delimited problem dataset")->required();
    }
    cmd->add_option("--config", opt.config_file, "JSON config file (flags override)");
    cmd->add_option("--script", opt.script, "scripted backend responses file");
    cmd->add_option("--endpoint", opt.endpoint, "live chat-completion endpoint base URL");
    cmd->add_option("--model", opt.model, "model name for the live endpoint");
    cmd->add_option("--prompts", opt.prompts_dir, "prompt template override directory");
    cmd->add_option("--workers", opt.workers, "worker pool width");
    cmd->add_option("--seed", opt.seed, "seed recorded for stochastic choices");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--iverilog", opt.iverilog, "Verilog compiler path");
    cmd->add_option("--vvp", opt.vvp, "Verilog simulation runtime path");
    cmd->add_option("--compile-timeout", opt.compile_timeout, "compile timeout, seconds");
    cmd->add_option("--sim-timeout", opt.sim_timeout, "simulation timeout, seconds");
}

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%FT%TZ", std::gmtime(&t));
    return buffer;
}

std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    }
    return out.empty() ? "unnamed" : out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw tbforge::Error("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& value) {
    write_text(path, value.dump(2) + "\n");
}

struct BackendSetup {
    std::unique_ptr<tbforge::agents::Backend> backend;
    bool scripted = false;
};

BackendSetup make_backend(const Options& opt, std::optional<double> generator_temperature = {}) {
    BackendSetup setup;
    if (!opt.script.empty()) {
        setup.backend = tbforge::agents::ScriptedBackend::from_file(opt.script);
        setup.scripted = true;
        return setup;
    }
    if (opt.endpoint.empty()) {
        throw tbforge::ConfigError("configure a backend: --script PATH or --endpoint URL --model NAME");
    }
    tbforge::agents::HttpBackendConfig cfg;
    cfg.base_url = opt.endpoint;
    cfg.model = opt.model;
    if (generator_temperature) {
        cfg.temperature_override[tbforge::agents::AgentRole::CodeGenerator] = *generator_temperature;
    }
    setup.backend = std::make_unique<tbforge::agents::HttpBackend>(cfg);
    return setup;
}

tbforge::agents::PromptLibrary make_prompts(const Options& opt) {
    auto prompts = tbforge::agents::PromptLibrary::with_defaults();
    if (!opt.prompts_dir.empty()) prompts.load_directory(opt.prompts_dir);
    return prompts;
}

tbforge::harness::ToolConfig make_toolchain(const Options& opt) {
    auto cfg = tbforge::harness::resolve_toolchain(fs::path(opt.out_dir) / "workdirs",
                                                   opt.iverilog, opt.vvp);
    cfg.compile_timeout = opt.compile_timeout;
    cfg.sim_timeout = opt.sim_timeout;
    tbforge::harness::validate_config(cfg);
    return cfg;
}

// Scripted responses are keyed by (role, sequence index); concurrent
// consumption would make assignments scheduling-dependent.
int effective_workers(const Options& opt, bool scripted) {
    if (!scripted) return opt.workers;
    if (opt.workers_explicit && opt.workers > 1) {
        std::cerr << "note: scripted backend runs problems sequentially for determinism\n";
    }
    return 1;
}

json config_snapshot(const Options& opt, const std::string& command,
                     const tbforge::harness::ToolConfig& tool) {
    json snap;
    snap["command"] = command;
    snap["dataset"] = opt.dataset;
    snap["variant"] = opt.variant;
    snap["budget"] = opt.budget;
    snap["pre_budget"] = opt.pre_budget;
    snap["post_budget"] = opt.post_budget;
    snap["runs"] = opt.runs;
    snap["workers"] = opt.workers;
    snap["script"] = opt.script;
    snap["endpoint"] = opt.endpoint;
    snap["model"] = opt.model;
    snap["prompts"] = opt.prompts_dir;
    snap["policy"] = opt.policy;
    snap["n"] = opt.n;
    snap["k"] = opt.k_csv;
    snap["seed"] = opt.seed;
    snap["out"] = opt.out_dir;
    snap["compiler"] = tool.compiler_path.string();
    snap["runtime"] = tool.runtime_path.string();
    snap["compile_timeout"] = tool.compile_timeout;
    snap["sim_timeout"] = tool.sim_timeout;
    return snap;
}

json ledger_to_json(const tbforge::pipeline::StageLedger& ledger) {
    json pass;
    for (std::size_t s = 0; s < tbforge::pipeline::kStageCount; ++s) {
        pass[std::string(tbforge::pipeline::stage_key(static_cast<tbforge::pipeline::StageId>(s)))] =
            ledger.pass_count[s];
    }
    return json{{"pass_count", pass},
                {"api_calls", ledger.api_calls},
                {"attempted", ledger.attempted},
                {"passed", ledger.passed},
                {"errored", ledger.errored}};
}

tbforge::pipeline::StageLedger ledger_from_json(const json& obj) {
    tbforge::pipeline::StageLedger ledger;
    const auto& pass = obj.at("pass_count");
    for (std::size_t s = 0; s < tbforge::pipeline::kStageCount; ++s) {
        auto key = std::string(tbforge::pipeline::stage_key(static_cast<tbforge::pipeline::StageId>(s)));
        ledger.pass_count[s] = pass.value(key, 0ULL);
        ledger.passed += ledger.pass_count[s];
    }
    ledger.api_calls = obj.value("api_calls", 0ULL);
    ledger.attempted = obj.value("attempted", 0ULL);
    ledger.errored = obj.value("errored", 0ULL);
    return ledger;
}

json report_to_json(const tbforge::pipeline::AggregateReport& report,
                    const std::vector<tbforge::pipeline::StageLedger>& runs, bool interrupted) {
    json stages;
    for (std::size_t s = 0; s < tbforge::pipeline::kStageCount; ++s) {
        stages[std::string(tbforge::pipeline::stage_key(static_cast<tbforge::pipeline::StageId>(s)))] =
            report.mean_pass[s];
    }
    json out;
    out["variant"] = std::string(tbforge::pipeline::variant_name(report.variant));
    out["n_runs"] = report.n_runs;
    out["questions_per_run"] = report.attempted_per_run;
    out["stages"] = stages;
    out["total_pass"] = report.mean_total;
    out["api_count"] = report.mean_api;
    out["errored"] = report.mean_errored;
    out["interrupted"] = interrupted;
    json run_array = json::array();
    for (const auto& ledger : runs) run_array.push_back(ledger_to_json(ledger));
    out["runs"] = run_array;
    return out;
}

json transcript_to_json(const tbforge::pipeline::PipelineResult& result) {
    json events = json::array();
    for (const auto& event : result.transcript) {
        events.push_back({{"actor", event.actor},
                          {"stage", std::string(tbforge::pipeline::stage_key(event.stage))},
                          {"outcome", event.outcome}});
    }
    json out;
    out["problem_id"] = result.problem_id;
    out["succeeded"] = result.succeeded;
    out["errored"] = result.errored;
    if (result.errored) out["error_message"] = result.error_message;
    if (result.pass_stage) {
        out["pass_stage"] = std::string(tbforge::pipeline::stage_key(*result.pass_stage));
    }
    if (result.refined_spec) out["refined_spec"] = *result.refined_spec;
    if (result.final_tb) out["final_tb"] = *result.final_tb;
    out["events"] = events;
    return out;
}

std::vector<int> parse_k_list(const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    if (out.empty()) throw tbforge::ConfigError("--k must list at least one value");
    return out;
}

int cmd_gen_tb(const Options& opt) {
    auto started = iso_timestamp();
    auto start_clock = std::chrono::steady_clock::now();

    auto variant = tbforge::pipeline::variant_from_name(opt.variant);
    if (!variant) throw tbforge::ConfigError("unknown variant: " + opt.variant);

    auto records = tbforge::corpus::load_dataset(opt.dataset);
    if (opt.require_tb || !opt.sources.empty()) {
        std::optional<std::set<std::string>> source_filter;
        if (!opt.sources.empty()) {
            source_filter.emplace(opt.sources.begin(), opt.sources.end());
        }
        records = tbforge::corpus::filter_records(records, opt.require_tb, source_filter);
    }

    fs::create_directories(opt.out_dir);
    auto tool = make_toolchain(opt);
    auto setup = make_backend(opt);
    auto prompts = make_prompts(opt);
    int workers = effective_workers(opt, setup.scripted);

    tbforge::pipeline::VerifyFn verify = [&](const std::string& module_src,
                                             const std::string& tb_src) {
        return tbforge::harness::verify(module_src, tb_src, tool);
    };
    tbforge::pipeline::Budgets budgets{opt.budget, opt.pre_budget, opt.post_budget};

    std::vector<tbforge::pipeline::StageLedger> ledgers;
    std::uint64_t errored_total = 0;
    std::string first_error;
    for (int run_index = 1; run_index <= opt.runs; ++run_index) {
        if (g_interrupted.load()) break;
        auto outcome = tbforge::pipeline::run_batch(records, *variant, *setup.backend, prompts,
                                                    verify, budgets, workers, &g_interrupted);
        fs::path run_dir = fs::path(opt.out_dir) / ("run-" + std::to_string(run_index));
        fs::create_directories(run_dir / "transcripts");
        fs::create_directories(run_dir / "testbenches");
        for (const auto& result : outcome.results) {
            write_json(run_dir / "transcripts" / (sanitize_filename(result.problem_id) + ".json"),
                       transcript_to_json(result));
            if (result.final_tb) {
                write_text(run_dir / "testbenches" / (sanitize_filename(result.problem_id) + ".v"),
                           *result.final_tb);
            }
            if (result.errored && first_error.empty()) first_error = result.error_message;
        }
        write_json(run_dir / "ledger.json", ledger_to_json(outcome.ledger));
        errored_total += outcome.ledger.errored;
        ledgers.push_back(outcome.ledger);
    }

    bool interrupted = g_interrupted.load();
    if (ledgers.empty()) {
        std::cerr << "interrupted before any run completed\n";
        return 130;
    }

    auto report = tbforge::pipeline::aggregate_report(ledgers, ledgers.size(), *variant);
    std::string table = tbforge::pipeline::render_report_table(report);
    write_text(fs::path(opt.out_dir) / "report.txt", table);
    write_json(fs::path(opt.out_dir) / "report.json", report_to_json(report, ledgers, interrupted));
    write_json(fs::path(opt.out_dir) / "config_snapshot.json",
               config_snapshot(opt, "gen-tb", tool));

    json meta;
    meta["command"] = "gen-tb";
    meta["started_at"] = started;
    meta["finished_at"] = iso_timestamp();
    meta["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_clock).count();
    meta["interrupted"] = interrupted;
    write_json(fs::path(opt.out_dir) / "run_meta.json", meta);

    std::cout << table;
    if (interrupted) {
        std::cerr << "interrupted: partial report written\n";
        return 130;
    }
    if (errored_total > 0) {
        std::cerr << errored_total << " problem(s) errored on backend failures";
        if (!first_error.empty()) std::cerr << " (first: " << first_error << ")";
        std::cerr << "\n";
        return 1;
    }
    return 0;
}

int cmd_distill(const Options& opt) {
    auto started = iso_timestamp();

    auto records = tbforge::corpus::load_dataset(opt.dataset);
    records = tbforge::corpus::filter_records(records, /*require_tb=*/true);

    auto policy = tbforge::distill::sft_policy_from_name(opt.policy);
    if (!policy) throw tbforge::ConfigError("unknown policy: " + opt.policy);

    fs::create_directories(opt.out_dir);
    auto tool = make_toolchain(opt);
    auto setup = make_backend(opt);
    auto prompts = make_prompts(opt);
    int workers = effective_workers(opt, setup.scripted);

    tbforge::distill::ClassifyFn classify = [&](const std::string& code, const std::string& tb) {
        return tbforge::harness::classify(code, tb, tool);
    };

    auto [distilled, stats] = tbforge::distill::run_distillation(
        records, *setup.backend, prompts, classify, {}, workers, &g_interrupted);

    std::ofstream rec_out(fs::path(opt.out_dir) / "distill_records.jsonl");
    for (const auto& rec : distilled) {
        json obj;
        obj["problem_id"] = rec.problem_id;
        obj["reasoning"] = rec.reasoning;
        if (rec.generated_code) obj["generated_code"] = *rec.generated_code;
        obj["classification"] = std::string(tbforge::distill::distill_class_name(rec.classification));
        obj["usage"] = {{"input_tokens", rec.usage.input_tokens},
                        {"output_tokens", rec.usage.output_tokens}};
        rec_out << obj.dump() << '\n';
    }
    rec_out.close();

    auto sft = tbforge::distill::make_sft_records(records, distilled, *policy);
    std::string sft_name = *policy == tbforge::distill::SftPolicy::Functional
                               ? "sft_functional.jsonl"
                               : "sft_all_compiling.jsonl";
    tbforge::corpus::write_sft_dataset(sft, fs::path(opt.out_dir) / sft_name);

    json stats_json;
    stats_json["total"] = stats.total;
    stats_json["functional"] = stats.functional;
    stats_json["syntactic"] = stats.syntactic;
    stats_json["compile_error"] = stats.compile_error;
    stats_json["errored"] = stats.errored;
    stats_json["input_tokens"] = stats.input_tokens;
    stats_json["output_tokens"] = stats.output_tokens;
    stats_json["elapsed_seconds"] = stats.elapsed;
    stats_json["throughput_tokens_per_second"] = stats.throughput;
    write_json(fs::path(opt.out_dir) / "stats.json", stats_json);
    write_json(fs::path(opt.out_dir) / "config_snapshot.json",
               config_snapshot(opt, "distill", tool));

    json meta;
    meta["command"] = "distill";
    meta["started_at"] = started;
    meta["finished_at"] = iso_timestamp();
    meta["interrupted"] = g_interrupted.load();
    write_json(fs::path(opt.out_dir) / "run_meta.json", meta);

    char line[256];
    std::snprintf(line, sizeof(line),
                  "functional=%llu syntactic=%llu compile_error=%llu errored=%llu "
                  "throughput=%.3f tok/s\n",
                  static_cast<unsigned long long>(stats.functional),
                  static_cast<unsigned long long>(stats.syntactic),
                  static_cast<unsigned long long>(stats.compile_error),
                  static_cast<unsigned long long>(stats.errored), stats.throughput);
    std::cout << line;
    return g_interrupted.load() ? 130 : 0;
}

int cmd_eval(const Options& opt) {
    auto started = iso_timestamp();

    auto records = tbforge::corpus::load_dataset(opt.dataset);
    std::vector<tbforge::evalrunner::EvalProblem> problems;
    problems.reserve(records.size());
    for (const auto& rec : records) {
        problems.push_back(tbforge::evalrunner::eval_problem_from(rec));
    }

    fs::create_directories(opt.out_dir);
    auto tool = make_toolchain(opt);
    // Smoke runs (n=1) sample deterministically; estimator-quality runs sample.
    auto setup = make_backend(opt, opt.n == 1 ? 0.0 : 0.8);
    auto prompts = make_prompts(opt);
    int workers = effective_workers(opt, setup.scripted);
    auto k_list = parse_k_list(opt.k_csv);

    tbforge::distill::ClassifyFn classify = [&](const std::string& code, const std::string& tb) {
        return tbforge::harness::classify(code, tb, tool);
    };

    auto report = tbforge::evalrunner::run_eval(problems, opt.n, k_list, *setup.backend, prompts,
                                                classify, workers, &g_interrupted);
    std::string table = tbforge::evalrunner::render_eval_table(report);
    write_text(fs::path(opt.out_dir) / "eval_report.txt", table);

    json out;
    out["n"] = report.n;
    out["k"] = report.k_list;
    json problem_rows = json::array();
    for (const auto& outcome : report.outcomes) {
        json row;
        row["id"] = outcome.problem_id;
        row["n"] = outcome.n;
        row["c"] = outcome.c;
        json classes = json::array();
        for (auto cls : outcome.per_sample) {
            classes.push_back(std::string(tbforge::harness::classification_name(cls)));
        }
        row["per_sample"] = classes;
        json per_k;
        for (int k : report.k_list) {
            per_k[std::to_string(k)] = tbforge::evalrunner::pass_at_k(outcome.n, outcome.c, k);
        }
        row["pass_at_k"] = per_k;
        problem_rows.push_back(row);
    }
    out["problems"] = problem_rows;
    json aggregate;
    json aggregate_percent;
    for (const auto& [k, value] : report.aggregate) {
        aggregate[std::to_string(k)] = value;
        aggregate_percent[std::to_string(k)] = std::llround(value * 100.0);
    }
    out["aggregate"] = aggregate;
    out["aggregate_percent"] = aggregate_percent;
    out["backend_errors"] = report.backend_errors;
    write_json(fs::path(opt.out_dir) / "eval_report.json", out);
    write_json(fs::path(opt.out_dir) / "config_snapshot.json", config_snapshot(opt, "eval", tool));

    json meta;
    meta["command"] = "eval";
    meta["started_at"] = started;
    meta["finished_at"] = iso_timestamp();
    meta["interrupted"] = g_interrupted.load();
    write_json(fs::path(opt.out_dir) / "run_meta.json", meta);

    std::cout << table;
    if (report.backend_errors > 0) {
        std::cerr << report.backend_errors
                  << " sample(s) lost to transport failures against " << opt.endpoint << "\n";
        return 1;
    }
    return g_interrupted.load() ? 130 : 0;
}

int cmd_report(const Options& opt) {
    std::ifstream in(opt.report_input);
    if (!in) throw tbforge::ConfigError("cannot open report: " + opt.report_input);
    json saved;
    in >> saved;

    auto variant = tbforge::pipeline::variant_from_name(saved.value("variant", "baseline"));
    if (!variant) throw tbforge::ConfigError("saved report has unknown variant");
    std::vector<tbforge::pipeline::StageLedger> ledgers;
    for (const auto& entry : saved.at("runs")) {
        ledgers.push_back(ledger_from_json(entry));
    }
    auto report = tbforge::pipeline::aggregate_report(ledgers, ledgers.size(), *variant);
    std::cout << tbforge::pipeline::render_report_table(report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    install_signal_handler();

    CLI::App app{"tbforge: multi-agent Verilog testbench generation and data curation"};
    app.require_subcommand(1);
    Options opt;

    auto* gen = app.add_subcommand("gen-tb", "run a testbench-generation pipeline over a dataset");
    add_common_flags(gen, opt, true);
    gen->add_option("--variant", opt.variant, "baseline | pregen");
    gen->add_option("--budget", opt.budget, "baseline retry budget (<= 6)");
    gen->add_option("--pre-budget", opt.pre_budget, "pregen phase-A retry budget");
    gen->add_option("--post-budget", opt.post_budget, "pregen phase-B retry budget");
    gen->add_option("--runs", opt.runs, "independent runs to average");
    gen->add_flag("--require-tb", opt.require_tb, "keep only records with a reference testbench");
    gen->add_option("--source", opt.sources, "keep only records with this source tag (repeatable)");

    auto* dis = app.add_subcommand("distill", "generate and classify reasoning-trace records");
    add_common_flags(dis, opt, true);
    dis->add_option("--policy", opt.policy, "functional | all-compiling");

    auto* ev = app.add_subcommand("eval", "sample a generator and compute pass@k");
    add_common_flags(ev, opt, true);
    ev->add_option("--n", opt.n, "samples per problem");
    ev->add_option("--k", opt.k_csv, "comma-separated k values");

    auto* rep = app.add_subcommand("report", "re-render a saved report.json");
    rep->add_option("--input", opt.report_input, "saved report.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            opt.workers_explicit = gen->count("--workers") > 0;
            apply_config_file(*gen, opt);
            return cmd_gen_tb(opt);
        }
        if (dis->parsed()) {
            opt.workers_explicit = dis->count("--workers") > 0;
            apply_config_file(*dis, opt);
            return cmd_distill(opt);
        }
        if (ev->parsed()) {
            opt.workers_explicit = ev->count("--workers") > 0;
            apply_config_file(*ev, opt);
            return cmd_eval(opt);
        }
        if (rep->parsed()) {
            return cmd_report(opt);
        }
    } catch (const tbforge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
