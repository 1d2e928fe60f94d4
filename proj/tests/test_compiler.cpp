#include <doctest.h>

#include <Eigen/Dense>

#include "qnp/compiler.hpp"
#include "qnp/experiments.hpp"
#include "qnp/quantum.hpp"
#include "qnp/rng.hpp"
#include "support/enumerate.hpp"

using namespace qnp;

namespace {

std::vector<BlockType> type_sequence(const Program& p) {
    std::vector<BlockType> out;
    for (const auto& b : p.blocks) out.push_back(b.type);
    return out;
}

int count_gates(const Program& p, GateKind kind) {
    int n = 0;
    for (const auto& b : p.blocks)
        for (const auto& in : b.instrs)
            if (const auto* g = std::get_if<QGate>(&in))
                if (g->gate == kind) ++n;
    return n;
}

int count_rotations(const Program& p) {
    return count_gates(p, GateKind::RX) + count_gates(p, GateKind::RY) +
           count_gates(p, GateKind::RZ);
}

int count_blocks(const Program& p, BlockType t) {
    int n = 0;
    for (const auto& b : p.blocks) n += b.type == t;
    return n;
}

Program toy_ql_chain(const std::vector<BlockType>& types) {
    Program p;
    p.name = "toy";
    p.node_role = "n";
    p.variables["v"] = 0.5;
    int bid = 1;
    bool allocated = false;
    for (BlockType t : types) {
        Block b;
        b.id = bid++;
        b.type = t;
        if (t == BlockType::QL) {
            if (!allocated) {
                b.instrs.push_back(QAlloc{0, InitState::Zero});
                allocated = true;
            }
            b.instrs.push_back(QGate{GateKind::H, 0});
        } else if (t == BlockType::CC) {
            b.instrs.push_back(SendMsg{"peer", "v"});
        } else {
            b.instrs.push_back(ClassicalCompute{1, std::nullopt, {}});
        }
        p.blocks.push_back(std::move(b));
    }
    return p;
}

}  // namespace

TEST_CASE("reorder sinks quantum blocks past independent classical ones") {
    Rng rng(3);
    auto [client, server] = build_rotation_app(2, false, rng);
    // Fig-1-left shape: QL CC QL CC QL
    CHECK(type_sequence(server) ==
          std::vector<BlockType>{BlockType::QL, BlockType::CC, BlockType::QL, BlockType::CC,
                                 BlockType::QL});
    Program r = reorder_blocks(server);
    CHECK(type_sequence(r) == std::vector<BlockType>{BlockType::CC, BlockType::CC, BlockType::QL,
                                                     BlockType::QL, BlockType::QL});
    CHECK(validate(r).ok());
}

TEST_CASE("reorder leaves pure-classical programs unchanged") {
    Rng rng(3);
    auto [client, server] = build_rotation_app(3, false, rng);
    CHECK(serialize(reorder_blocks(client)) == serialize(client));
}

TEST_CASE("merge_rotations combines adjacent same-axis rotations") {
    Program p;
    p.name = "m";
    p.node_role = "n";
    p.variables["t1"] = 0.3;
    p.variables["t2"] = 0.4;
    Block b;
    b.id = 1;
    b.type = BlockType::QL;
    b.instrs.push_back(QAlloc{0, InitState::Zero});
    b.instrs.push_back(QGate{GateKind::RX, 0, -1, AngleExpr::variable("t1")});
    b.instrs.push_back(QGate{GateKind::RX, 0, -1, AngleExpr::variable("t2")});
    p.blocks.push_back(b);
    Program m = merge_rotations(p);
    CHECK(count_rotations(m) == 1);
    const auto* g = std::get_if<QGate>(&m.blocks[0].instrs[1]);
    REQUIRE(g);
    CHECK(g->angle.terms.size() == 2);

    // different axes do not merge
    Program q = p;
    std::get<QGate>(q.blocks[0].instrs[2]).gate = GateKind::RZ;
    CHECK(count_rotations(merge_rotations(q)) == 2);
}

TEST_CASE("merge_rotations does not cross an intervening CZ on the same qubit") {
    Program p;
    p.name = "m2";
    p.node_role = "n";
    p.variables["a"] = 0.25;
    p.variables["b"] = 0.5;
    Block blk;
    blk.id = 1;
    blk.type = BlockType::QL;
    blk.instrs.push_back(QAlloc{0, InitState::Zero});
    blk.instrs.push_back(QAlloc{1, InitState::Zero});
    SUBCASE("rotation, CZ, rotation stays split") {
        blk.instrs.push_back(QGate{GateKind::RZ, 0, -1, AngleExpr::variable("a")});
        blk.instrs.push_back(QGate{GateKind::CZ, 0, 1});
        blk.instrs.push_back(QGate{GateKind::RZ, 0, -1, AngleExpr::variable("b")});
        p.blocks.push_back(blk);
        CHECK(count_rotations(merge_rotations(p)) == 2);
    }
    SUBCASE("CZ before both rotations lets them merge") {
        blk.instrs.push_back(QGate{GateKind::CZ, 0, 1});
        blk.instrs.push_back(QGate{GateKind::RZ, 0, -1, AngleExpr::variable("a")});
        blk.instrs.push_back(QGate{GateKind::RZ, 0, -1, AngleExpr::variable("b")});
        p.blocks.push_back(blk);
        CHECK(count_rotations(merge_rotations(p)) == 1);
    }
}

TEST_CASE("merged rotation equals the product of the originals") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        double a = rng.uniform() * 6.28, b = rng.uniform() * 6.28;
        for (GateKind g : {GateKind::RX, GateKind::RY, GateKind::RZ}) {
            Eigen::Matrix2cd prod = gate_matrix_1q(g, b) * gate_matrix_1q(g, a);
            Eigen::Matrix2cd merged = gate_matrix_1q(g, a + b);
            // equal up to global phase
            std::complex<double> phase = 0;
            double norm = 0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    if (std::abs(merged(i, j)) > 1e-8) {
                        phase = prod(i, j) / merged(i, j);
                        break;
                    }
            (void)norm;
            CHECK((prod - phase * merged).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("hybrid optimization of the rotation app reaches the target shape") {
    for (int n = 1; n <= 10; ++n) {
        Rng rng(static_cast<uint64_t>(n) + 40);
        auto [client, server] = build_rotation_app(n, false, rng);
        Program opt = hybrid_optimize(server);
        CHECK(validate(opt).ok());
        CHECK(count_blocks(opt, BlockType::CC) == n);
        CHECK(count_blocks(opt, BlockType::QL) == 1);
        CHECK(count_rotations(opt) == 1);  // gate-count reduction for any n
        // idempotence
        CHECK(serialize(hybrid_optimize(opt)) == serialize(opt));
    }
}

TEST_CASE("hybrid optimization halves the delegated-computation rotations") {
    for (int n : {1, 2, 3, 5}) {
        Rng rng(static_cast<uint64_t>(n) + 60);
        auto [client, server] = build_bqc_app(n, false, rng);
        CHECK(count_rotations(server) == 2 * n);
        CHECK(count_gates(server, GateKind::CZ) == n - 1);
        Program opt = hybrid_optimize(server);
        CHECK(validate(opt).ok());
        CHECK(count_rotations(opt) == n);
        CHECK(count_gates(opt, GateKind::CZ) == n - 1);
        CHECK(serialize(hybrid_optimize(opt)) == serialize(opt));
    }
}

TEST_CASE("selfish block compilation minimizes QL blocks") {
    Program coop = build_scenario1_local(true);
    CHECK(count_blocks(coop, BlockType::QL) == 200);
    Program selfish = block_selfish(coop);
    CHECK(count_blocks(selfish, BlockType::QL) == 1);
    CHECK(validate(selfish).ok());
    CHECK(serialize(block_selfish(selfish)) == serialize(selfish));

    Program alternating = toy_ql_chain({BlockType::QL, BlockType::CC, BlockType::QL});
    CHECK(serialize(block_selfish(alternating)) == serialize(alternating));

    Program qqcq = toy_ql_chain({BlockType::QL, BlockType::QL, BlockType::CC, BlockType::QL});
    Program merged = block_selfish(qqcq);
    CHECK(count_blocks(merged, BlockType::QL) == 2);
    CHECK(merged.blocks.size() == 3);
}

TEST_CASE("cooperative block compilation enforces the gate cap") {
    Program p;
    p.name = "split";
    p.node_role = "n";
    p.variables["m"] = std::nullopt;
    Block b;
    b.id = 1;
    b.type = BlockType::QL;
    b.instrs.push_back(QAlloc{0, InitState::Zero});
    for (int g = 0; g < 8; ++g) b.instrs.push_back(QGate{GateKind::H, 0});
    b.instrs.push_back(QMeasure{0, Basis::Z, "m"});
    p.blocks.push_back(b);

    CHECK(serialize(block_cooperative(p, 8)) == serialize(p));
    Program split = block_cooperative(p, 3);
    REQUIRE(split.blocks.size() == 3);
    auto gates_in = [](const Block& blk) {
        int n = 0;
        for (const auto& in : blk.instrs) n += std::holds_alternative<QGate>(in);
        return n;
    };
    CHECK(gates_in(split.blocks[0]) == 3);
    CHECK(gates_in(split.blocks[1]) == 3);
    CHECK(gates_in(split.blocks[2]) == 2);
    CHECK(split.blocks[1].load_qubits == 1);  // live qubit carried across
    CHECK(split.blocks[2].load_qubits == 1);
    CHECK(validate(split).ok());
    CHECK(serialize(block_cooperative(split, 3)) == serialize(split));
    CHECK_THROWS_AS((void)block_cooperative(p, 0), std::invalid_argument);

    // cooperative then selfish is the identity up to renumbering here
    CHECK(serialize(block_selfish(split)) == serialize(block_selfish(p)));
}

TEST_CASE("1-cooperative splitting of the optimized server") {
    Rng rng(77);
    auto [client, server] = build_bqc_app(3, true, rng);
    Program coop = block_cooperative(server, 1);
    CHECK(validate(coop).ok());
    for (const auto& b : coop.blocks) {
        int gates = 0;
        for (const auto& in : b.instrs) gates += std::holds_alternative<QGate>(in);
        CHECK(gates <= 1);
    }
    CHECK(count_blocks(coop, BlockType::QL) > count_blocks(server, BlockType::QL));
}

TEST_CASE("deadline assignment policies") {
    TimingParams t;
    Program p = toy_ql_chain({BlockType::QL, BlockType::CL, BlockType::QL});
    Program selfish = assign_deadlines(p, DeadlinePolicy::Selfish, t);
    CHECK_FALSE(selfish.blocks[0].deadline.has_value());  // first block: none
    CHECK(*selfish.blocks[1].deadline == 15);
    CHECK(*selfish.blocks[2].deadline == 50'000);

    Program coop = assign_deadlines(p, DeadlinePolicy::Cooperative, t, 100);
    CHECK(*coop.blocks[1].deadline == 1'500);
    CHECK(*coop.blocks[2].deadline == 100 * (50'000 + 107'000));

    Program freed = assign_deadlines(coop, DeadlinePolicy::Free, t);
    for (const auto& b : freed.blocks) CHECK_FALSE(b.deadline.has_value());

    // idempotence
    CHECK(serialize(assign_deadlines(selfish, DeadlinePolicy::Selfish, t)) ==
          serialize(selfish));
}

TEST_CASE("critical section spans the last entanglement through the last measurement") {
    Rng rng(13);
    auto [client, server] = build_bqc_app(3, true, rng);
    Program cs = add_critical_section(server);
    REQUIRE(cs.critical_sections.size() == 1);
    const auto& sec = cs.critical_sections[0];
    int first_idx = cs.block_index(sec.first);
    int last_idx = cs.block_index(sec.last);
    CHECK(cs.blocks[static_cast<size_t>(first_idx)].type == BlockType::QC);
    // nothing after `first` is a QC block
    for (int i = first_idx + 1; i < static_cast<int>(cs.blocks.size()); ++i)
        CHECK(cs.blocks[static_cast<size_t>(i)].type != BlockType::QC);
    // `last` holds the final measurement
    bool found_meas = false;
    for (const auto& in : cs.blocks[static_cast<size_t>(last_idx)].instrs)
        if (std::holds_alternative<QMeasure>(in)) found_meas = true;
    CHECK(found_meas);
    for (int i = last_idx + 1; i < static_cast<int>(cs.blocks.size()); ++i)
        for (const auto& in : cs.blocks[static_cast<size_t>(i)].instrs)
            CHECK_FALSE(std::holds_alternative<QMeasure>(in));
    CHECK(validate(cs).ok());

    // purely classical programs are rejected
    Rng rng2(14);
    auto [rot_client, rot_server] = build_rotation_app(2, false, rng2);
    CHECK_THROWS_AS((void)add_critical_section(rot_client), std::runtime_error);
    // no entanglement block: also rejected
    CHECK_THROWS_AS((void)add_critical_section(rot_server), std::runtime_error);
}

TEST_CASE("semantic preservation of hybrid optimization on the rotation app") {
    Rng rng(101);
    auto [client, server] = build_rotation_app(2, false, rng);
    auto base = testsupport::enumerate_outcomes({client, server});
    auto opt = testsupport::enumerate_outcomes({client, hybrid_optimize(server)});
    CHECK(testsupport::distribution_distance(base, opt) < 1e-9);
}
