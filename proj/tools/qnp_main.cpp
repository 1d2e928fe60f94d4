#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "qnp/compiler.hpp"
#include "qnp/experiments.hpp"
#include "qnp/program.hpp"
#include "qnp/runtime.hpp"

using namespace qnp;

namespace {

Strategy parse_strategy(const std::string& s) {
    if (s == "hybrid") return Strategy::HybridOptimize;
    if (s == "block-selfish") return Strategy::BlockSelfish;
    if (s == "block-cooperative") return Strategy::BlockCooperative;
    if (s == "deadline-free") return Strategy::DeadlineFree;
    if (s == "deadline-selfish") return Strategy::DeadlineSelfish;
    if (s == "deadline-cooperative") return Strategy::DeadlineCooperative;
    if (s == "critical-section") return Strategy::CriticalSection;
    throw CLI::ValidationError("unknown strategy " + s);
}

ScenarioKind parse_scenario(const std::string& s) {
    if (s == "rotation") return ScenarioKind::Rotation;
    if (s == "bqc") return ScenarioKind::Bqc;
    if (s == "block1") return ScenarioKind::BlockScen1;
    if (s == "block2") return ScenarioKind::BlockScen2;
    if (s == "block3") return ScenarioKind::BlockScen3;
    if (s == "deadline") return ScenarioKind::Deadline;
    if (s == "critical") return ScenarioKind::Critical;
    if (s == "critical-large") return ScenarioKind::CriticalLargeBlocks;
    throw CLI::ValidationError("unknown scenario " + s);
}

SweepParam parse_sweep(const std::string& s) {
    if (s == "fidelity") return SweepParam::GateFidelity;
    if (s == "cc-latency") return SweepParam::CcLatencyFrac;
    if (s == "bin-multiple") return SweepParam::BinMultiple;
    if (s == "distance") return SweepParam::Distance;
    throw CLI::ValidationError("unknown sweep parameter " + s);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compiler and multi-program scheduling simulator for hybrid "
                 "quantum-classical network programs"};
    app.require_subcommand(1);

    // compile
    auto* compile = app.add_subcommand("compile", "apply a compilation strategy to a program");
    std::string strategy_name, in_path, out_path;
    int coop_n = 8, coop_m = 100;
    compile->add_option("--strategy", strategy_name, "hybrid | block-selfish | block-cooperative | "
                        "deadline-free | deadline-selfish | deadline-cooperative | critical-section")
        ->required();
    compile->add_option("--n", coop_n, "gate cap for block-cooperative");
    compile->add_option("--m", coop_m, "multiplier for deadline-cooperative");
    compile->add_option("--in", in_path, "input program")->required();
    compile->add_option("--out", out_path, "output program")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a scenario sweep and write CSV");
    std::string scenario_name = "rotation", sweep_name, csv_path, trace_path, config_path;
    std::string variant_name = "baseline";
    int n = 3, c = 2, runs = 0, seed_count = 10;
    std::string seeds_file;
    int threads = 0;
    simulate->add_option("--scenario", scenario_name,
                         "rotation | bqc | block1 | block2 | block3 | deadline | critical | critical-large")
        ->required();
    simulate->add_option("--n", n, "program size (qubits / angles)");
    simulate->add_option("--c", c, "number of clients");
    simulate->add_option("--strategy", variant_name,
                         "baseline | variant (variant = optimized / cooperative / selfish-deadline / "
                         "critical-section depending on scenario)");
    simulate->add_option("--sweep", sweep_name, "fidelity | cc-latency | bin-multiple | distance");
    simulate->add_option("--runs", runs, "runs per seed (default 1000 for rotation/bqc, 100 otherwise)");
    simulate->add_option("--seeds", seed_count, "number of master seeds (1..N)");
    simulate->add_option("--seeds-file", seeds_file, "file with one seed per line");
    simulate->add_option("--threads", threads, "worker threads (0 = all cores)");
    simulate->add_option("--out", csv_path, "output CSV path");
    simulate->add_option("--trace", trace_path,
                         "run a single simulation instead and dump a JSONL trace");
    simulate->add_option("--config", config_path, "experiment config file");

    // formulas
    auto* formulas = app.add_subcommand("formulas", "evaluate the link formulas");
    bool check = false;
    formulas->add_flag("--check", check, "verify against reference values");

    // config
    auto* config = app.add_subcommand("config", "print the default experiment config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (compile->parsed()) {
            Program p = load_program(in_path);
            auto rep = validate(p);
            if (!rep.ok()) {
                for (const auto& v : rep.violations)
                    std::cerr << "invalid program: block " << v.block << ": " << v.rule
                              << (v.detail.empty() ? "" : " (" + v.detail + ")") << "\n";
                return 1;
            }
            PassConfig cfg;
            cfg.strategy = parse_strategy(strategy_name);
            cfg.n = coop_n;
            cfg.m = coop_m;
            save_program(apply_strategy(p, cfg), out_path);
            return 0;
        }
        if (simulate->parsed()) {
            ScenarioSpec spec;
            spec.kind = parse_scenario(scenario_name);
            spec.n = n;
            spec.c = c;
            spec.variant = variant_name == "variant";
            spec.threads = threads;
            if (!sweep_name.empty()) {
                spec.sweep = parse_sweep(sweep_name);
            } else {
                spec.sweep = (spec.kind == ScenarioKind::Rotation || spec.kind == ScenarioKind::Bqc)
                                 ? SweepParam::GateFidelity
                                 : SweepParam::BinMultiple;
            }
            spec.runs_per_seed = runs > 0 ? runs
                                 : (spec.kind == ScenarioKind::Rotation ||
                                    spec.kind == ScenarioKind::Bqc)
                                     ? 1000
                                     : 100;
            if (!config_path.empty()) spec.hw = ExperimentConfig::load(config_path);
            if (!seeds_file.empty()) {
                std::ifstream f(seeds_file);
                if (!f) throw std::runtime_error("cannot open " + seeds_file);
                spec.seeds.clear();
                uint64_t s;
                while (f >> s) spec.seeds.push_back(s);
            } else {
                spec.seeds.clear();
                for (int i = 1; i <= seed_count; ++i)
                    spec.seeds.push_back(static_cast<uint64_t>(i));
            }
            if (!trace_path.empty()) {
                spec.apply_default_sweep();
                Rng build_rng(derive_seed(spec.seeds.at(0), 0, 0, 1));
                Rng sched_rng(derive_seed(spec.seeds.at(0), 0, 0, 2));
                SimConfig sim = make_scenario_sim(spec, spec.sweep_values.at(0), build_rng,
                                                  sched_rng);
                sim.record_trace = true;
                Trace tr = run_simulation(sim, derive_seed(spec.seeds.at(0), 0, 0, 3));
                write_file(trace_path, tr.to_jsonl());
                std::cout << "trace written to " << trace_path << "\n";
                return 0;
            }
            SweepResult res = run_sweep(spec);
            std::string csv = sweep_to_csv(res);
            if (csv_path.empty()) std::cout << csv;
            else {
                write_file(csv_path, csv);
                std::cout << "results written to " << csv_path << "\n";
            }
            return 0;
        }
        if (formulas->parsed()) {
            bool ok = true;
            std::cout << formulas_check(ok);
            if (check && !ok) return 1;
            std::cout << (ok ? "all formulas match\n" : "mismatches found\n");
            return ok ? 0 : 1;
        }
        if (config->parsed()) {
            std::cout << ExperimentConfig{}.to_text();
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
