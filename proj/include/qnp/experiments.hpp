#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qnp/compiler.hpp"
#include "qnp/runtime.hpp"

namespace qnp {

// --- application builders -------------------------------------------------

/// Client sends n random angles summing to 2pi; the server applies the
/// X rotations to a random eigenstate and measures in its init basis.
/// The optimized server is the hybrid-optimization of the plain one.
std::pair<Program, Program> build_rotation_app(int n, bool optimized, Rng& rng,
                                               const NodeId& client_node = "client",
                                               const NodeId& server_node = "server");

/// n-qubit delegated computation on a line graph: remote state
/// preparation via EPR + measurement, CZ chain, adaptive measurement
/// angles with feedforward chosen so the noiseless outcome of the last
/// measurement is 0.
std::pair<Program, Program> build_bqc_app(int n, bool optimized, Rng& rng,
                                          const NodeId& client_node = "client",
                                          const NodeId& server_node = "server");

/// Measurement angle sequence making the delegated line-graph
/// computation deterministic (expected final outcome 0).
std::vector<double> bqc_logical_angles(int n);

/// 200 iterations of [alloc; gates; measure]; one block when selfish,
/// one block per iteration when cooperative.
Program build_scenario1_local(bool cooperative, int iterations = 200, int gates_per_iter = 8,
                              const NodeId& node = "server");

/// Same gate load on one long-lived qubit with a single final
/// measurement; iteration composites sum to a full X rotation.
Program build_scenario2_local(bool cooperative, int iterations = 200, int gates_per_iter = 8,
                              const NodeId& node = "server");

/// Pads every QL block with identity H pairs until its estimated
/// duration reaches target_ns.
void inflate_ql_blocks(Program& p, Duration target_ns, const TimingParams& timing);

// --- experiment sweeps ------------------------------------------------------

enum class ScenarioKind {
    Rotation,
    Bqc,
    BlockScen1,
    BlockScen2,
    BlockScen3,
    Deadline,
    Critical,
    CriticalLargeBlocks,
};

enum class SweepParam { GateFidelity, CcLatencyFrac, BinMultiple, Distance };

const char* to_string(ScenarioKind k);
const char* to_string(SweepParam p);

/// Hardware/link base configuration, loadable from the sectioned text
/// config format ([hardware], [link], [schedule], [scenario]).
struct ExperimentConfig {
    TimingParams timing;
    NoiseModel noise;
    LinkParams link = LinkParams::lab();
    int bin_multiple = 1;
    Duration cc_latency_ns = 155'000;

    static ExperimentConfig load(const std::string& path);
    std::string to_text() const;
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Rotation;
    int n = 3;
    int c = 2;
    /// Rotation/Bqc: hybrid-optimized server variant. Block scenarios:
    /// cooperative compilation of the program under study. Deadline:
    /// selfish deadlines for C1. Critical: C1 compiled with a critical
    /// section.
    bool variant = false;
    SweepParam sweep = SweepParam::BinMultiple;
    std::vector<double> sweep_values;
    int runs_per_seed = 100;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int threads = 0;  // 0 = hardware concurrency
    ExperimentConfig hw;  // base hardware; sweeps override per scenario

    /// Default sweep grid for the scenario.
    void apply_default_sweep();
};

struct RoleStats {
    std::string role;
    double mean_exec_ns = 0;
    double stderr_exec_ns = 0;
    double mean_success = 0;
    double stderr_success = 0;
};

struct SweepPoint {
    double sweep_value = 0;
    std::vector<RoleStats> roles;
    const RoleStats* role(const std::string& name) const;
};

struct SweepResult {
    ScenarioSpec spec;
    std::vector<SweepPoint> points;

    /// Mean over every sweep point of a role's metric.
    double grid_mean_exec(const std::string& role) const;
    double grid_mean_success(const std::string& role) const;
};

SweepResult run_sweep(const ScenarioSpec& spec);

struct ImprovementPoint {
    double sweep_value = 0;
    std::string role;
    double success_delta = 0;       // variant - baseline, absolute
    double exec_rel_delta = 0;      // (variant - baseline) / baseline
};

/// Per-point deltas between two sweeps on identical grids.
std::vector<ImprovementPoint> success_improvement(const SweepResult& variant,
                                                  const SweepResult& baseline);

/// Builds the simulation for one run of a scenario; exposed for tests
/// and trace export.
SimConfig make_scenario_sim(const ScenarioSpec& spec, double sweep_value, Rng& build_rng,
                            Rng& sched_rng);

std::string sweep_to_csv(const SweepResult& r);

/// Evaluates the link formulas against the built-in reference values;
/// returns a human-readable report and sets ok.
std::string formulas_check(bool& ok);

}  // namespace qnp
