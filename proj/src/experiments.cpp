#include "qnp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qnp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string var(const char* base, int i) { return std::string(base) + std::to_string(i); }

InitState random_init_state(Rng& rng) {
    static const InitState states[6] = {InitState::PlusX,  InitState::MinusX, InitState::PlusY,
                                        InitState::MinusY, InitState::PlusZ,  InitState::MinusZ};
    return states[rng.below(6)];
}

}  // namespace

std::pair<Program, Program> build_rotation_app(int n, bool optimized, Rng& rng,
                                               const NodeId& client_node,
                                               const NodeId& server_node) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    InitState init = random_init_state(rng);
    std::vector<double> angles(n);
    double sum = 0;
    for (auto& a : angles) {
        a = rng.uniform() + 1e-9;
        sum += a;
    }
    for (auto& a : angles) a *= 2.0 * kPi / sum;

    Program client;
    client.name = "rotation_client";
    client.node_role = client_node;
    int bid = 1;
    for (int i = 1; i <= n; ++i) {
        client.variables[var("th", i)] = angles[static_cast<size_t>(i - 1)];
        Block b;
        b.id = bid++;
        b.type = BlockType::CC;
        b.instrs.push_back(SendMsg{server_node, var("th", i)});
        client.blocks.push_back(std::move(b));
    }

    Program server;
    server.name = "rotation_server";
    server.node_role = server_node;
    for (int i = 1; i <= n; ++i) server.variables[var("rth", i)] = std::nullopt;
    server.variables["res"] = std::nullopt;
    bid = 1;
    Block binit;
    binit.id = bid++;
    binit.type = BlockType::QL;
    binit.instrs.push_back(QAlloc{0, init});
    server.blocks.push_back(std::move(binit));
    for (int i = 1; i <= n; ++i) {
        Block brecv;
        brecv.id = bid++;
        brecv.type = BlockType::CC;
        brecv.instrs.push_back(RecvMsg{client_node, var("rth", i)});
        server.blocks.push_back(std::move(brecv));
        Block brot;
        brot.id = bid++;
        brot.type = BlockType::QL;
        brot.instrs.push_back(QGate{GateKind::RX, 0, -1, AngleExpr::variable(var("rth", i))});
        if (i == n) brot.instrs.push_back(QMeasure{0, basis_of(init), "res"});
        server.blocks.push_back(std::move(brot));
    }
    server.success_checks.push_back({{"res"}, 0, expected_outcome(init)});
    if (optimized) server = hybrid_optimize(server);
    return {std::move(client), std::move(server)};
}

std::vector<double> bqc_logical_angles(int n) {
    if (n == 1) return {0.0};
    std::vector<double> a(static_cast<size_t>(n), kPi);
    a.front() = kPi / 2;
    a.back() = kPi / 2;
    return a;
}

std::pair<Program, Program> build_bqc_app(int n, bool optimized, Rng& rng,
                                          const NodeId& client_node, const NodeId& server_node) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    std::vector<double> theta(static_cast<size_t>(n));
    for (auto& t : theta) t = kPi / 4.0 * static_cast<double>(rng.below(8));
    std::vector<double> a = bqc_logical_angles(n);

    Program client;
    client.name = "bqc_client";
    client.node_role = client_node;
    int bid = 1;
    for (int i = 1; i <= n; ++i) {
        client.variables[var("z", i)] = std::nullopt;
        client.variables[var("c", i)] = std::nullopt;
        client.variables[var("d", i)] = std::nullopt;
        client.variables[var("m", i)] = std::nullopt;
    }
    for (int i = 1; i <= n; ++i) {
        Block bq;
        bq.id = bid++;
        bq.type = BlockType::QC;
        bq.instrs.push_back(EprRequest{server_node, 1, {i}});
        client.blocks.push_back(std::move(bq));

        Block brsp;  // remote state preparation: measure own half at -theta_i
        brsp.id = bid++;
        brsp.type = BlockType::QL;
        brsp.instrs.push_back(
            QGate{GateKind::RZ, i, -1, AngleExpr(theta[static_cast<size_t>(i - 1)])});
        brsp.instrs.push_back(QMeasure{i, Basis::X, var("z", i)});
        client.blocks.push_back(std::move(brsp));

        Block bcomp;
        bcomp.id = bid++;
        bcomp.type = BlockType::CL;
        bcomp.instrs.push_back(
            ClassicalCompute{1, var("c", i), AngleExpr::variable(var("z", i), kPi)});
        client.blocks.push_back(std::move(bcomp));

        Block bsend;
        bsend.id = bid++;
        bsend.type = BlockType::CC;
        bsend.instrs.push_back(SendMsg{server_node, var("c", i)});
        client.blocks.push_back(std::move(bsend));
    }
    for (int i = 1; i <= n; ++i) {
        // delta_i = a_i - theta_i - 2 a_i m_{i-1} + pi m_{i-2}
        AngleExpr d(a[static_cast<size_t>(i - 1)] - theta[static_cast<size_t>(i - 1)]);
        if (i >= 2) d.add(-2.0 * a[static_cast<size_t>(i - 1)], var("m", i - 1));
        if (i >= 3) d.add(kPi, var("m", i - 2));
        Block bcomp;
        bcomp.id = bid++;
        bcomp.type = BlockType::CL;
        bcomp.instrs.push_back(ClassicalCompute{1, var("d", i), std::move(d)});
        client.blocks.push_back(std::move(bcomp));
        Block bsend;
        bsend.id = bid++;
        bsend.type = BlockType::CC;
        bsend.instrs.push_back(SendMsg{server_node, var("d", i)});
        client.blocks.push_back(std::move(bsend));
        Block brecv;
        brecv.id = bid++;
        brecv.type = BlockType::CC;
        brecv.instrs.push_back(RecvMsg{server_node, var("m", i)});
        client.blocks.push_back(std::move(brecv));
    }
    client.success_checks.push_back({{var("m", n)}, 0, 0});

    Program server;
    server.name = "bqc_server";
    server.node_role = server_node;
    bid = 1;
    for (int i = 1; i <= n; ++i) {
        server.variables[var("rc", i)] = std::nullopt;
        server.variables[var("rd", i)] = std::nullopt;
        server.variables[var("m", i)] = std::nullopt;
    }
    for (int i = 1; i <= n; ++i) {
        Block bq;
        bq.id = bid++;
        bq.type = BlockType::QC;
        bq.instrs.push_back(EprRequest{client_node, 1, {i}});
        server.blocks.push_back(std::move(bq));
        Block brecv;
        brecv.id = bid++;
        brecv.type = BlockType::CC;
        brecv.instrs.push_back(RecvMsg{client_node, var("rc", i)});
        server.blocks.push_back(std::move(brecv));
        Block bcorr;
        bcorr.id = bid++;
        bcorr.type = BlockType::QL;
        bcorr.instrs.push_back(QGate{GateKind::RZ, i, -1, AngleExpr::variable(var("rc", i))});
        server.blocks.push_back(std::move(bcorr));
    }
    for (int i = 1; i < n; ++i) {
        Block bcz;
        bcz.id = bid++;
        bcz.type = BlockType::QL;
        bcz.instrs.push_back(QGate{GateKind::CZ, i, i + 1});
        server.blocks.push_back(std::move(bcz));
    }
    for (int i = 1; i <= n; ++i) {
        Block brecv;
        brecv.id = bid++;
        brecv.type = BlockType::CC;
        brecv.instrs.push_back(RecvMsg{client_node, var("rd", i)});
        server.blocks.push_back(std::move(brecv));
        Block bmeas;
        bmeas.id = bid++;
        bmeas.type = BlockType::QL;
        bmeas.instrs.push_back(QGate{GateKind::RZ, i, -1, AngleExpr::variable(var("rd", i))});
        bmeas.instrs.push_back(QMeasure{i, Basis::X, var("m", i)});
        server.blocks.push_back(std::move(bmeas));
        Block bsend;
        bsend.id = bid++;
        bsend.type = BlockType::CC;
        bsend.instrs.push_back(SendMsg{client_node, var("m", i)});
        server.blocks.push_back(std::move(bsend));
    }
    server.success_checks.push_back({{var("m", n)}, 0, 0});
    if (optimized) server = hybrid_optimize(server);
    return {std::move(client), std::move(server)};
}

Program build_scenario1_local(bool cooperative, int iterations, int gates_per_iter,
                              const NodeId& node) {
    Program p;
    p.name = cooperative ? "local_repeat_coop" : "local_repeat_selfish";
    p.node_role = node;
    int bid = 1;
    Block cur;
    cur.id = bid++;
    cur.type = BlockType::QL;
    for (int k = 1; k <= iterations; ++k) {
        p.variables[var("o", k)] = std::nullopt;
        cur.instrs.push_back(QAlloc{0, InitState::Zero});
        for (int g = 0; g < gates_per_iter; ++g) cur.instrs.push_back(QGate{GateKind::H, 0});
        cur.instrs.push_back(QMeasure{0, Basis::Z, var("o", k)});
        p.success_checks.push_back({{var("o", k)}, 0, 0});
        if (cooperative) {
            p.blocks.push_back(std::move(cur));
            cur = Block{};
            cur.id = bid++;
            cur.type = BlockType::QL;
        }
    }
    if (!cooperative) p.blocks.push_back(std::move(cur));
    p.renumber_chain();
    return p;
}

Program build_scenario2_local(bool cooperative, int iterations, int gates_per_iter,
                              const NodeId& node) {
    Program p;
    p.name = cooperative ? "local_live_coop" : "local_live_selfish";
    p.node_role = node;
    p.variables["o"] = std::nullopt;
    // per-gate angle so the whole program is one full X rotation
    double angle = 2.0 * kPi / (static_cast<double>(iterations) * gates_per_iter);
    int bid = 1;
    Block cur;
    cur.id = bid++;
    cur.type = BlockType::QL;
    cur.instrs.push_back(QAlloc{0, InitState::Zero});
    for (int k = 1; k <= iterations; ++k) {
        for (int g = 0; g < gates_per_iter; ++g)
            cur.instrs.push_back(QGate{GateKind::RX, 0, -1, AngleExpr(angle)});
        if (k == iterations) cur.instrs.push_back(QMeasure{0, Basis::Z, "o"});
        if (cooperative) {
            if (k > 1) cur.load_qubits = 1;  // the live qubit is carried across the split
            p.blocks.push_back(std::move(cur));
            cur = Block{};
            cur.id = bid++;
            cur.type = BlockType::QL;
        }
    }
    if (!cooperative) p.blocks.push_back(std::move(cur));
    std::erase_if(p.blocks, [](const Block& b) { return b.instrs.empty(); });
    p.success_checks.push_back({{"o"}, 0, 0});
    p.renumber_chain();
    return p;
}

void inflate_ql_blocks(Program& p, Duration target_ns, const TimingParams& timing) {
    for (auto& b : p.blocks) {
        if (b.type != BlockType::QL) continue;
        Duration cur = estimate_block_duration(b, timing);
        if (cur >= target_ns) continue;
        Duration per_gate = timing.quantum_instr_ns + timing.gate_1q_ns;
        int k = static_cast<int>((target_ns - cur + per_gate - 1) / per_gate);
        if (k % 2) ++k;  // identity pairs only
        QubitId q = -1;
        size_t insert_at = b.instrs.size();
        for (size_t i = 0; i < b.instrs.size(); ++i) {
            if (const auto* m = std::get_if<QMeasure>(&b.instrs[i])) {
                q = m->qubit;
                insert_at = i;
            }
        }
        if (q < 0) {
            for (const auto& in : b.instrs)
                if (const auto* g = std::get_if<QGate>(&in)) { q = g->q0; break; }
        }
        if (q < 0) continue;
        std::vector<Instruction> pads(static_cast<size_t>(k), QGate{GateKind::H, q});
        b.instrs.insert(b.instrs.begin() + static_cast<long>(insert_at), pads.begin(), pads.end());
    }
}

// ---------------------------------------------------------------------------

const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Rotation: return "rotation";
        case ScenarioKind::Bqc: return "bqc";
        case ScenarioKind::BlockScen1: return "block1";
        case ScenarioKind::BlockScen2: return "block2";
        case ScenarioKind::BlockScen3: return "block3";
        case ScenarioKind::Deadline: return "deadline";
        case ScenarioKind::Critical: return "critical";
        case ScenarioKind::CriticalLargeBlocks: return "critical-large";
    }
    return "?";
}

const char* to_string(SweepParam p) {
    switch (p) {
        case SweepParam::GateFidelity: return "gate_fidelity";
        case SweepParam::CcLatencyFrac: return "cc_latency_frac";
        case SweepParam::BinMultiple: return "bin_multiple";
        case SweepParam::Distance: return "distance";
    }
    return "?";
}

void ScenarioSpec::apply_default_sweep() {
    if (!sweep_values.empty()) return;
    switch (sweep) {
        case SweepParam::GateFidelity:
            sweep_values = {0.95, 0.96, 0.97, 0.98, 0.99, 0.995, 0.999};
            break;
        case SweepParam::CcLatencyFrac:
            sweep_values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
            break;
        case SweepParam::BinMultiple:
            sweep_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
            break;
        case SweepParam::Distance: {
            sweep_values.clear();
            for (size_t i = 0; i < surfnet_topology().size(); ++i)
                sweep_values.push_back(static_cast<double>(i));
            break;
        }
    }
}

namespace {

constexpr Duration kInfiniteT2 = 1'000'000'000'000'000'000;  // effectively no dephasing

NodeConfig make_node(const NodeId& id, int qubits, const NoiseModel& noise,
                     const TimingParams& timing) {
    NodeConfig n;
    n.id = id;
    n.num_qubits = qubits;
    n.noise = noise;
    n.timing = timing;
    return n;
}

Program default_server_pipeline(Program server) {
    return block_selfish(std::move(server));
}

/// Iteration count sized so the single-block local program runs for
/// about 3.5x the expected entanglement generation time.
int scenario_local_iterations(const ExperimentConfig& hw, const LinkParams& link) {
    Duration per_iter = 2 * hw.timing.quantum_instr_ns +
                        8 * (hw.timing.quantum_instr_ns + hw.timing.gate_1q_ns);
    double target = 3.5 * static_cast<double>(expected_epr_ns(link));
    int iters = static_cast<int>(std::lround(target / static_cast<double>(per_iter)));
    return std::max(1, iters);
}

}  // namespace

SimConfig make_scenario_sim(const ScenarioSpec& spec, double sweep_value, Rng& build_rng,
                            Rng& sched_rng) {
    SimConfig sim;
    NoiseModel noise = spec.hw.noise;
    const TimingParams& timing = spec.hw.timing;
    sim.link = spec.hw.link;
    sim.default_latency_ns = spec.hw.cc_latency_ns;

    switch (spec.kind) {
        case ScenarioKind::Rotation: {
            if (spec.sweep == SweepParam::GateFidelity) {
                noise.f1 = sweep_value;
                noise.f2 = 1.0;
                noise.pair_fidelity = 1.0;
                noise.t2_ns = kInfiniteT2;
            } else if (spec.sweep == SweepParam::CcLatencyFrac) {
                noise.f1 = 1.0;
                noise.f2 = 1.0;
                noise.pair_fidelity = 1.0;
                sim.default_latency_ns =
                    static_cast<Duration>(sweep_value * static_cast<double>(noise.t2_ns));
            } else {
                throw std::invalid_argument("unsupported sweep for rotation scenario");
            }
            auto [client, server] = build_rotation_app(spec.n, spec.variant, build_rng, "C", "S");
            sim.nodes = {make_node("S", 8, noise, timing), make_node("C", 8, noise, timing)};
            sim.instances.push_back({0, "C", 0, "client", std::move(client), 0});
            sim.instances.push_back({1, "S", 0, "server", std::move(server), 0});
            sim.schedule.bin_length_ns = 1'000'000'000;
            sim.schedule.pattern = {0};
            break;
        }
        case ScenarioKind::Bqc: {
            if (spec.sweep == SweepParam::GateFidelity) {
                noise.f1 = sweep_value;
                noise.f2 = 1.0;
                noise.pair_fidelity = 1.0;
                noise.t2_ns = kInfiniteT2;
            } else if (spec.sweep == SweepParam::Distance) {
                const auto& entry = surfnet_topology().at(static_cast<size_t>(sweep_value));
                sim.link = LinkParams::at_distance(entry.distance_km);
                sim.default_latency_ns = classical_latency(entry.distance_km, entry.hops);
            } else {
                throw std::invalid_argument("unsupported sweep for bqc scenario");
            }
            auto [client, server] = build_bqc_app(spec.n, spec.variant, build_rng, "C", "S");
            server = default_server_pipeline(std::move(server));
            sim.nodes = {make_node("S", 64, noise, timing), make_node("C", 8, noise, timing)};
            sim.instances.push_back({0, "C", 0, "client", std::move(client), 0});
            sim.instances.push_back({1, "S", 0, "server", std::move(server), 0});
            sim.schedule = build_schedule({0}, 1, expected_epr_ns(sim.link), sched_rng);
            break;
        }
        case ScenarioKind::BlockScen1:
        case ScenarioKind::BlockScen2:
        case ScenarioKind::BlockScen3:
        case ScenarioKind::Deadline:
        case ScenarioKind::Critical:
        case ScenarioKind::CriticalLargeBlocks: {
            if (spec.sweep != SweepParam::BinMultiple)
                throw std::invalid_argument("scenario sweeps bin multiples");
            if (spec.kind == ScenarioKind::BlockScen2) noise.f1 = 1.0;
            int c = spec.c;
            bool has_local =
                spec.kind == ScenarioKind::BlockScen1 || spec.kind == ScenarioKind::BlockScen2;
            sim.nodes.push_back(make_node("S", 256, noise, timing));
            for (int i = 1; i <= c; ++i)
                sim.nodes.push_back(make_node("C" + std::to_string(i), 8, noise, timing));
            if (has_local) {
                // the local job is admitted first and wins scheduling ties
                int iters = scenario_local_iterations(spec.hw, sim.link);
                Program local = spec.kind == ScenarioKind::BlockScen1
                                    ? build_scenario1_local(spec.variant, iters)
                                    : build_scenario2_local(spec.variant, iters);
                sim.instances.push_back({0, "S", -1, "local", std::move(local), 0});
            }
            for (int app = 0; app < c; ++app) {
                NodeId cnode = "C" + std::to_string(app + 1);
                auto [client, server] = build_bqc_app(spec.n, true, build_rng, cnode, "S");
                bool is_c1 = app == 0;
                switch (spec.kind) {
                    case ScenarioKind::BlockScen3:
                        server = spec.variant ? block_cooperative(server, 1)
                                              : default_server_pipeline(std::move(server));
                        break;
                    case ScenarioKind::Deadline: {
                        server = default_server_pipeline(std::move(server));
                        DeadlinePolicy pol =
                            (is_c1 && spec.variant) ? DeadlinePolicy::Selfish
                                                    : DeadlinePolicy::Cooperative;
                        server = assign_deadlines(server, pol, timing, 100);
                        break;
                    }
                    case ScenarioKind::Critical:
                    case ScenarioKind::CriticalLargeBlocks: {
                        // per-instruction quantum blocks: the published
                        // baseline block durations (0.33-0.5% of the
                        // expected generation time) are single-instruction
                        // sized
                        server = block_cooperative(server, 1);
                        if (spec.kind == ScenarioKind::CriticalLargeBlocks)
                            inflate_ql_blocks(server,
                                              static_cast<Duration>(0.17 * static_cast<double>(
                                                                               expected_epr_ns(
                                                                                   sim.link))),
                                              timing);
                        if (is_c1 && spec.variant) server = add_critical_section(server);
                        break;
                    }
                    default:
                        server = default_server_pipeline(std::move(server));
                        break;
                }
                std::string srole = "bqc", crole = "client";
                if (spec.kind == ScenarioKind::Deadline || spec.kind == ScenarioKind::Critical ||
                    spec.kind == ScenarioKind::CriticalLargeBlocks) {
                    srole = is_c1 ? "c1" : "others";
                    crole = is_c1 ? "c1_client" : "other_clients";
                }
                int base = (has_local ? 1 : 0) + 2 * app;
                sim.instances.push_back({base, cnode, app, crole, std::move(client), 0});
                sim.instances.push_back({base + 1, "S", app, srole, std::move(server), 0});
            }
            std::vector<int> apps(static_cast<size_t>(c));
            std::iota(apps.begin(), apps.end(), 0);
            sim.schedule = build_schedule(apps, static_cast<int>(sweep_value),
                                          expected_epr_ns(sim.link), sched_rng);
            break;
        }
    }
    return sim;
}

// ---------------------------------------------------------------------------

const RoleStats* SweepPoint::role(const std::string& name) const {
    for (const auto& r : roles)
        if (r.role == name) return &r;
    return nullptr;
}

double SweepResult::grid_mean_exec(const std::string& role) const {
    double s = 0;
    int n = 0;
    for (const auto& p : points)
        if (const auto* r = p.role(role)) {
            s += r->mean_exec_ns;
            ++n;
        }
    return n ? s / n : 0;
}

double SweepResult::grid_mean_success(const std::string& role) const {
    double s = 0;
    int n = 0;
    for (const auto& p : points)
        if (const auto* r = p.role(role)) {
            s += r->mean_success;
            ++n;
        }
    return n ? s / n : 0;
}

namespace {

struct SeedAccum {
    std::map<std::string, std::pair<double, long>> exec;     // role -> (sum, count)
    std::map<std::string, std::pair<double, long>> success;  // role -> (sum, count)
};

SeedAccum run_cell(const ScenarioSpec& spec, size_t value_idx, size_t seed_idx) {
    SeedAccum acc;
    double value = spec.sweep_values[value_idx];
    uint64_t master = spec.seeds[seed_idx];
    for (int r = 0; r < spec.runs_per_seed; ++r) {
        try {
            Rng build_rng(derive_seed(master, value_idx, static_cast<uint64_t>(r), 1));
            Rng sched_rng(derive_seed(master, value_idx, static_cast<uint64_t>(r), 2));
            SimConfig sim = make_scenario_sim(spec, value, build_rng, sched_rng);
            Trace tr =
                run_simulation(sim, derive_seed(master, value_idx, static_cast<uint64_t>(r), 3));
            for (const auto& inst : tr.instances) {
                auto& e = acc.exec[inst.role];
                e.first += static_cast<double>(inst.exec_time());
                e.second += 1;
                auto& s = acc.success[inst.role];
                s.first += inst.success ? 1.0 : 0.0;
                s.second += 1;
            }
        } catch (const std::exception& ex) {
            throw SimError("sweep value " + std::to_string(value) + ", seed " +
                           std::to_string(master) + ", run " + std::to_string(r) + ": " +
                           ex.what());
        }
    }
    return acc;
}

}  // namespace

SweepResult run_sweep(const ScenarioSpec& spec_in) {
    ScenarioSpec spec = spec_in;
    spec.apply_default_sweep();
    if (spec.sweep_values.empty() || spec.seeds.empty())
        throw std::invalid_argument("empty sweep");

    const size_t nv = spec.sweep_values.size();
    const size_t ns = spec.seeds.size();
    std::vector<SeedAccum> cells(nv * ns);
    std::vector<std::string> errors(nv * ns);

    unsigned threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= nv * ns) break;
            try {
                cells[i] = run_cell(spec, i / ns, i % ns);
            } catch (const std::exception& ex) {
                errors[i] = ex.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (!e.empty()) throw SimError(e);

    SweepResult out;
    out.spec = spec;
    for (size_t v = 0; v < nv; ++v) {
        SweepPoint pt;
        pt.sweep_value = spec.sweep_values[v];
        std::map<std::string, std::vector<std::pair<double, double>>> per_seed;  // role -> (exec, success)
        for (size_t s = 0; s < ns; ++s) {
            const SeedAccum& acc = cells[v * ns + s];
            for (const auto& [role, exec] : acc.exec) {
                double mean_exec = exec.first / static_cast<double>(exec.second);
                double mean_succ = acc.success.at(role).first /
                                   static_cast<double>(acc.success.at(role).second);
                per_seed[role].emplace_back(mean_exec, mean_succ);
            }
        }
        for (const auto& [role, samples] : per_seed) {
            RoleStats rs;
            rs.role = role;
            double se = 0, ss = 0;
            for (auto [e, s2] : samples) {
                se += e;
                ss += s2;
            }
            double n = static_cast<double>(samples.size());
            rs.mean_exec_ns = se / n;
            rs.mean_success = ss / n;
            if (samples.size() > 1) {
                double ve = 0, vs = 0;
                for (auto [e, s2] : samples) {
                    ve += (e - rs.mean_exec_ns) * (e - rs.mean_exec_ns);
                    vs += (s2 - rs.mean_success) * (s2 - rs.mean_success);
                }
                rs.stderr_exec_ns = std::sqrt(ve / (n - 1)) / std::sqrt(n);
                rs.stderr_success = std::sqrt(vs / (n - 1)) / std::sqrt(n);
            }
            pt.roles.push_back(std::move(rs));
        }
        out.points.push_back(std::move(pt));
    }
    return out;
}

std::vector<ImprovementPoint> success_improvement(const SweepResult& variant,
                                                  const SweepResult& baseline) {
    if (variant.points.size() != baseline.points.size())
        throw std::invalid_argument("sweep grids differ");
    std::vector<ImprovementPoint> out;
    for (size_t i = 0; i < variant.points.size(); ++i) {
        const auto& pv = variant.points[i];
        const auto& pb = baseline.points[i];
        if (pv.sweep_value != pb.sweep_value) throw std::invalid_argument("sweep grids differ");
        for (const auto& rv : pv.roles) {
            const auto* rb = pb.role(rv.role);
            if (!rb) continue;
            ImprovementPoint ip;
            ip.sweep_value = pv.sweep_value;
            ip.role = rv.role;
            ip.success_delta = rv.mean_success - rb->mean_success;
            ip.exec_rel_delta =
                rb->mean_exec_ns > 0 ? (rv.mean_exec_ns - rb->mean_exec_ns) / rb->mean_exec_ns : 0;
            out.push_back(ip);
        }
    }
    return out;
}

std::string sweep_to_csv(const SweepResult& r) {
    std::ostringstream os;
    os << "scenario,sweep_param,sweep_value,n,c,program_role,strategy,mean_exec_time_ns,"
          "stderr_exec_time_ns,mean_success_prob,stderr_success_prob,seeds,runs_per_seed\n";
    char buf[64];
    for (const auto& pt : r.points) {
        for (const auto& role : pt.roles) {
            os << to_string(r.spec.kind) << "," << to_string(r.spec.sweep) << ",";
            std::snprintf(buf, sizeof buf, "%.17g", pt.sweep_value);
            os << buf << "," << r.spec.n << "," << r.spec.c << "," << role.role << ","
               << (r.spec.variant ? "variant" : "baseline") << ",";
            std::snprintf(buf, sizeof buf, "%.6f", role.mean_exec_ns);
            os << buf << ",";
            std::snprintf(buf, sizeof buf, "%.6f", role.stderr_exec_ns);
            os << buf << ",";
            std::snprintf(buf, sizeof buf, "%.9f", role.mean_success);
            os << buf << ",";
            std::snprintf(buf, sizeof buf, "%.9f", role.stderr_success);
            os << buf << "," << r.spec.seeds.size() << "," << r.spec.runs_per_seed << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    ExperimentConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("bad section at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("expected key = value at line " + std::to_string(lineno));
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::string value = line.substr(eq + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        double v = std::stod(value);
        auto ns = [&]() { return static_cast<Duration>(v); };
        bool known = true;
        if (section == "hardware") {
            if (key == "classical_instr_ns") cfg.timing.classical_instr_ns = ns();
            else if (key == "quantum_instr_ns") cfg.timing.quantum_instr_ns = ns();
            else if (key == "gate_1q_ns") cfg.timing.gate_1q_ns = ns();
            else if (key == "gate_2q_ns") cfg.timing.gate_2q_ns = ns();
            else if (key == "sched_msg_ns") cfg.timing.sched_msg_ns = ns();
            else if (key == "recv_proc_ns") cfg.timing.recv_proc_ns = ns();
            else if (key == "gate_fidelity_1q") cfg.noise.f1 = v;
            else if (key == "gate_fidelity_2q") cfg.noise.f2 = v;
            else if (key == "t2_ns") cfg.noise.t2_ns = ns();
            else if (key == "pair_fidelity") cfg.noise.pair_fidelity = v;
            else known = false;
        } else if (section == "link") {
            if (key == "alpha_db_per_km") cfg.link.alpha_db_per_km = v;
            else if (key == "eta_ion") cfg.link.eta_ion = v;
            else if (key == "eta_fc") cfg.link.eta_fc = v;
            else if (key == "eta_det") cfg.link.eta_det = v;
            else if (key == "eta_penalty") cfg.link.eta_penalty = v;
            else if (key == "t_class_ns") cfg.link.t_class_ns = ns();
            else if (key == "t_prep_ns") cfg.link.t_prep_ns = ns();
            else if (key == "distance_km") cfg.link.distance_km = v;
            else if (key == "succ_prob") cfg.link.succ_override = v;
            else known = false;
        } else if (section == "schedule") {
            if (key == "bin_multiple") cfg.bin_multiple = static_cast<int>(v);
            else known = false;
        } else if (section == "scenario") {
            if (key == "cc_latency_ns") cfg.cc_latency_ns = ns();
            else known = false;
        } else {
            known = false;
        }
        if (!known)
            throw std::runtime_error("unknown key '" + key + "' in section [" + section + "]");
    }
    return cfg;
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os << "[hardware]\n";
    os << "classical_instr_ns = " << timing.classical_instr_ns << "\n";
    os << "quantum_instr_ns = " << timing.quantum_instr_ns << "\n";
    os << "gate_1q_ns = " << timing.gate_1q_ns << "\n";
    os << "gate_2q_ns = " << timing.gate_2q_ns << "\n";
    os << "sched_msg_ns = " << timing.sched_msg_ns << "\n";
    os << "recv_proc_ns = " << timing.recv_proc_ns << "\n";
    os << "gate_fidelity_1q = " << noise.f1 << "\n";
    os << "gate_fidelity_2q = " << noise.f2 << "\n";
    os << "t2_ns = " << noise.t2_ns << "\n";
    os << "pair_fidelity = " << noise.pair_fidelity << "\n";
    os << "[link]\n";
    os << "alpha_db_per_km = " << link.alpha_db_per_km << "\n";
    os << "eta_ion = " << link.eta_ion << "\n";
    os << "eta_fc = " << link.eta_fc << "\n";
    os << "eta_det = " << link.eta_det << "\n";
    os << "eta_penalty = " << link.eta_penalty << "\n";
    os << "t_class_ns = " << link.t_class_ns << "\n";
    os << "t_prep_ns = " << link.t_prep_ns << "\n";
    if (link.succ_override) os << "succ_prob = " << *link.succ_override << "\n";
    os << "[schedule]\n";
    os << "bin_multiple = " << bin_multiple << "\n";
    os << "[scenario]\n";
    os << "cc_latency_ns = " << cc_latency_ns << "\n";
    return os.str();
}

std::string formulas_check(bool& ok) {
    std::ostringstream os;
    ok = true;
    char buf[160];
    auto expect = [&](const char* name, double got, double want, double tol) {
        bool pass = std::abs(got - want) <= tol;
        ok = ok && pass;
        std::snprintf(buf, sizeof buf, "%-34s %.9g (expected %.9g) %s\n", name, got, want,
                      pass ? "ok" : "MISMATCH");
        os << buf;
    };
    LinkParams base;  // formula defaults, eta_ion = 0.5
    expect("p_succ(d=0, eta_ion=0.5)", p_succ(base), 0.0099225, 1e-12);
    LinkParams alt = base;
    alt.eta_ion = 0.87;
    expect("p_succ(d=0, eta_ion=0.87)", p_succ(alt), 0.030041361, 5e-7);
    LinkParams far = base;
    far.distance_km = 100;
    expect("p_succ(d=100)/p_succ(0)", p_succ(far) / p_succ(base), std::pow(10.0, -1.0), 1e-12);

    LinkParams lab = LinkParams::lab();
    expect("lab success probability", p_succ(lab), 0.013, 1e-15);
    expect("lab attempt duration (ns)", static_cast<double>(t_cycle(lab)), 200'000, 0);
    double expected_ms = static_cast<double>(expected_epr_ns(lab)) / 1e6;
    expect("lab expected pair time (ms)", expected_ms, 200.0 / 0.013 / 1000.0, 1e-6);
    bool within = std::abs(expected_ms - 15.26) / 15.26 < 0.01;
    ok = ok && within;
    std::snprintf(buf, sizeof buf, "%-34s %.4f vs table 15.26 (%.2f%%) %s\n",
                  "expected time vs table", expected_ms,
                  100.0 * std::abs(expected_ms - 15.26) / 15.26, within ? "ok" : "MISMATCH");
    os << buf;

    expect("CCL(0 km, 0 hops) ns", static_cast<double>(classical_latency(0, 0)), 155'000, 0);
    expect("CCL(16.8 km, 1 hop) ns", static_cast<double>(classical_latency(16.8, 1)), 483'000, 0);
    expect("CCL(30.6 km, 0 hops) ns", static_cast<double>(classical_latency(30.6, 0)), 308'000, 0);

    auto t = topology_lookup("Delft 1", "Leiden 3");
    expect("topology Delft 1 - Leiden 3 km", t.distance_km, 55.2, 0);
    expect("topology Delft 1 - Leiden 3 hops", t.hops, 3, 0);
    return os.str();
}

}  // namespace qnp
