#include <doctest.h>

#include "qnp/experiments.hpp"
#include "qnp/runtime.hpp"
#include "support/invariants.hpp"

using namespace qnp;

namespace {

SimConfig single_node_sim(Program p, const NodeId& node = "n") {
    SimConfig sim;
    NodeConfig nc;
    nc.id = node;
    sim.nodes.push_back(nc);
    sim.instances.push_back({0, node, -1, "only", std::move(p), 0});
    sim.schedule.bin_length_ns = 1'000'000'000;
    sim.schedule.pattern = {0};
    return sim;
}

}  // namespace

TEST_CASE("edf_select case table") {
    Duration now = 1000;
    SUBCASE("earliest absolute deadline wins") {
        std::vector<SchedCandidate> c = {{now + 5, 0, 1, 1}, {now + 3, 0, 2, 1}};
        auto pick = edf_select(c, now);
        REQUIRE(pick);
        CHECK(c[*pick].instance == 2);
    }
    SUBCASE("deadline-bearing beats deadline-free") {
        // all four orderings of the two-candidate table
        std::vector<SchedCandidate> c1 = {{std::nullopt, 0, 1, 1}, {now + 999'999, 5, 2, 1}};
        CHECK(c1[*edf_select(c1, now)].instance == 2);
        std::vector<SchedCandidate> c2 = {{now + 999'999, 5, 2, 1}, {std::nullopt, 0, 1, 1}};
        CHECK(c2[*edf_select(c2, now)].instance == 2);
    }
    SUBCASE("ties break by ready time then instance id then block id") {
        std::vector<SchedCandidate> c = {{std::nullopt, 7, 1, 1}, {std::nullopt, 5, 2, 1}};
        CHECK(c[*edf_select(c, now)].instance == 2);
        std::vector<SchedCandidate> t = {{std::nullopt, 5, 4, 9}, {std::nullopt, 5, 2, 7}};
        CHECK(t[*edf_select(t, now)].instance == 2);
        std::vector<SchedCandidate> u = {{std::nullopt, 5, 2, 9}, {std::nullopt, 5, 2, 7}};
        CHECK(u[*edf_select(u, now)].block == 7);
    }
    SUBCASE("no candidates") { CHECK_FALSE(edf_select({}, now).has_value()); }
}

TEST_CASE("a single one-op classical block costs dispatch plus one instruction") {
    Program p;
    p.name = "tiny";
    p.node_role = "n";
    Block b;
    b.id = 1;
    b.type = BlockType::CL;
    b.instrs.push_back(ClassicalCompute{1, std::nullopt, {}});
    p.blocks.push_back(b);
    SimConfig sim = single_node_sim(p);
    sim.record_trace = true;
    Trace tr = run_simulation(sim, 1);
    REQUIRE(tr.instances.size() == 1);
    CHECK(tr.instances[0].completed);
    CHECK(tr.instances[0].exec_time() == 60 + 15);  // sched_msg + classical instr
    REQUIRE(tr.events.size() == 2);
    CHECK(tr.events[0].kind == TraceKind::Start);
    CHECK(tr.events[1].kind == TraceKind::End);
}

TEST_CASE("noiseless rotation app always succeeds") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Rng build_rng(seed);
        auto [client, server] = build_rotation_app(2, false, build_rng, "C", "S");
        SimConfig sim;
        NodeConfig s, c;
        s.id = "S";
        c.id = "C";
        s.noise.f1 = s.noise.f2 = 1.0;
        s.noise.pair_fidelity = 1.0;
        s.noise.t2_ns = 1'000'000'000'000'000'000;
        c.noise = s.noise;
        sim.nodes = {s, c};
        sim.default_latency_ns = 0;
        sim.instances.push_back({0, "C", 0, "client", client, 0});
        sim.instances.push_back({1, "S", 0, "server", server, 0});
        sim.schedule.bin_length_ns = 1'000'000'000;
        sim.schedule.pattern = {0};
        Trace tr = run_simulation(sim, seed);
        CHECK(success_of(sim.instances[1], tr));
    }
}

TEST_CASE("fully dephased rotation drives success to one half") {
    // |+X> held across a classical latency much longer than T2
    int ok = 0;
    const int kRuns = 2000;
    for (int r = 0; r < kRuns; ++r) {
        Program client;
        client.name = "c";
        client.node_role = "C";
        client.variables["th"] = 2 * 3.14159265358979312;
        Block cb;
        cb.id = 1;
        cb.type = BlockType::CC;
        cb.instrs.push_back(SendMsg{"S", "th"});
        client.blocks.push_back(cb);

        Program server;
        server.name = "s";
        server.node_role = "S";
        server.variables["rth"] = std::nullopt;
        server.variables["res"] = std::nullopt;
        Block b1;
        b1.id = 1;
        b1.type = BlockType::QL;
        b1.instrs.push_back(QAlloc{0, InitState::PlusX});
        server.blocks.push_back(b1);
        Block b2;
        b2.id = 2;
        b2.type = BlockType::CC;
        b2.instrs.push_back(RecvMsg{"C", "rth"});
        server.blocks.push_back(b2);
        Block b3;
        b3.id = 3;
        b3.type = BlockType::QL;
        b3.instrs.push_back(QGate{GateKind::RX, 0, -1, AngleExpr::variable("rth")});
        b3.instrs.push_back(QMeasure{0, Basis::X, "res"});
        server.blocks.push_back(b3);
        server.success_checks.push_back({{"res"}, 0, 0});

        SimConfig sim;
        NodeConfig s, c;
        s.id = "S";
        c.id = "C";
        s.noise.f1 = s.noise.f2 = 1.0;
        s.noise.pair_fidelity = 1.0;
        s.noise.t2_ns = 1'000'000;  // 1 ms
        c.noise = s.noise;
        sim.nodes = {s, c};
        sim.default_latency_ns = 20'000'000;  // 20 T2
        sim.instances.push_back({0, "C", 0, "client", client, 0});
        sim.instances.push_back({1, "S", 0, "server", server, 0});
        sim.schedule.bin_length_ns = 1'000'000'000;
        sim.schedule.pattern = {0};
        Trace tr = run_simulation(sim, static_cast<uint64_t>(r) + 100);
        ok += tr.instances[1].success;
    }
    double rate = static_cast<double>(ok) / kRuns;
    CHECK(rate > 0.45);
    CHECK(rate < 0.55);
}

TEST_CASE("simulation is deterministic: byte-identical traces") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::BlockScen1;
    spec.n = 3;
    spec.c = 2;
    spec.variant = true;
    spec.apply_default_sweep();
    for (int rep = 0; rep < 3; ++rep) {
        Rng b1(derive_seed(7, 0, 0, 1)), s1(derive_seed(7, 0, 0, 2));
        SimConfig sim1 = make_scenario_sim(spec, 3, b1, s1);
        sim1.record_trace = true;
        Rng b2(derive_seed(7, 0, 0, 1)), s2(derive_seed(7, 0, 0, 2));
        SimConfig sim2 = make_scenario_sim(spec, 3, b2, s2);
        sim2.record_trace = true;
        Trace t1 = run_simulation(sim1, 12345);
        Trace t2 = run_simulation(sim2, 12345);
        REQUIRE(t1.to_jsonl() == t2.to_jsonl());
    }
}

TEST_CASE("runtime invariants hold on a mixed scenario") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::BlockScen1;
    spec.n = 3;
    spec.c = 2;
    spec.variant = true;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Rng b(derive_seed(seed, 0, 0, 1)), s(derive_seed(seed, 0, 0, 2));
        SimConfig sim = make_scenario_sim(spec, 3, b, s);
        sim.record_trace = true;
        Trace tr = run_simulation(sim, seed);
        auto bad = testsupport::check_trace_invariants(sim, tr);
        for (const auto& v : bad) FAIL_CHECK(v);
        CHECK(bad.empty());
    }
}

TEST_CASE("critical sections exclude other instances") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Critical;
    spec.n = 3;
    spec.c = 2;
    spec.variant = true;  // C1 compiled with a critical section
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Rng b(derive_seed(seed, 1, 0, 1)), s(derive_seed(seed, 1, 0, 2));
        SimConfig sim = make_scenario_sim(spec, 2, b, s);
        sim.record_trace = true;
        Trace tr = run_simulation(sim, seed * 31);
        auto bad = testsupport::check_trace_invariants(sim, tr);
        for (const auto& v : bad) FAIL_CHECK(v);
        CHECK(bad.empty());
    }
}

TEST_CASE("deadlock produces a diagnostic") {
    // both sides wait for a message the other never sends
    auto waiting = [](const NodeId& self, const NodeId& other) {
        Program p;
        p.name = "stuck_" + self;
        p.node_role = self;
        p.variables["x"] = std::nullopt;
        Block b;
        b.id = 1;
        b.type = BlockType::CC;
        b.instrs.push_back(RecvMsg{other, "x"});
        p.blocks.push_back(b);
        return p;
    };
    SimConfig sim;
    NodeConfig a, b;
    a.id = "A";
    b.id = "B";
    sim.nodes = {a, b};
    sim.instances.push_back({0, "A", 0, "a", waiting("A", "B"), 0});
    sim.instances.push_back({1, "B", 0, "b", waiting("B", "A"), 0});
    sim.schedule.bin_length_ns = 1'000'000'000;
    sim.schedule.pattern = {0};
    CHECK_THROWS_WITH_AS((void)run_simulation(sim, 1),
                         doctest::Contains("deadlock"), SimError);
}

TEST_CASE("qubit capacity exhaustion is an admission error") {
    Program p;
    p.name = "greedy";
    p.node_role = "n";
    Block b;
    b.id = 1;
    b.type = BlockType::QL;
    b.instrs.push_back(QAlloc{0, InitState::Zero});
    b.instrs.push_back(QAlloc{1, InitState::Zero});
    p.blocks.push_back(b);
    SimConfig sim = single_node_sim(p);
    sim.nodes[0].num_qubits = 1;
    CHECK_THROWS_WITH_AS((void)run_simulation(sim, 1),
                         doctest::Contains("capacity"), SimError);
}

TEST_CASE("entanglement attempts stay within owned bins") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::BlockScen3;
    spec.n = 3;
    spec.c = 2;
    spec.variant = false;
    Rng b(derive_seed(3, 0, 0, 1)), s(derive_seed(3, 0, 0, 2));
    SimConfig sim = make_scenario_sim(spec, 3, b, s);
    sim.record_trace = true;
    Trace tr = run_simulation(sim, 99);
    int attempts_seen = 0;
    for (const auto& e : tr.events) {
        if (e.kind != TraceKind::EprAttempt) continue;
        ++attempts_seen;
        int app = sim.instances[static_cast<size_t>(e.instance)].app_id;
        CHECK(sim.schedule.owner(sim.schedule.bin_index(e.time)) == app);
    }
    CHECK(attempts_seen > 0);
}
