#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "qnp/quantum.hpp"
#include "qnp/rng.hpp"
#include "support/oracles.hpp"

using namespace qnp;
using cd = std::complex<double>;

namespace {

Eigen::VectorXcd ket(std::initializer_list<cd> amps) {
    Eigen::VectorXcd v(static_cast<long>(amps.size()));
    long i = 0;
    for (cd a : amps) v(i++) = a;
    return v;
}

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// NOTE: the bit convention maps qubit at position p to bit p, so for the
// two-qubit kets below index = (bit1 << 1) | bit0.
Eigen::VectorXcd phi_plus() {
    return ket({kInvSqrt2, 0, 0, kInvSqrt2});
}

}  // namespace

TEST_CASE("ideal X rotation flips the ground state") {
    NoiseModel ideal;
    ideal.f1 = ideal.f2 = 1.0;
    DensityMatrix dm = DensityMatrix::single(0, InitState::Zero);
    apply_gate(dm, GateKind::RX, 0, -1, M_PI, ideal);
    CHECK(dm.fidelity_with(ket({0, 1})) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("a full X rotation is the identity up to phase") {
    NoiseModel ideal;
    ideal.f1 = 1.0;
    DensityMatrix dm = DensityMatrix::single(0, InitState::PlusX);
    apply_gate(dm, GateKind::RX, 0, -1, 2 * M_PI, ideal);
    CHECK(dm.fidelity_with(ket({kInvSqrt2, kInvSqrt2})) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("depolarizing calibration: H at fidelity 0.99") {
    NoiseModel noise;
    noise.f1 = 0.99;
    DensityMatrix dm = DensityMatrix::single(0, InitState::Zero);
    apply_gate(dm, GateKind::H, 0, -1, 0, noise);
    CHECK(dm.fidelity_with(ket({kInvSqrt2, kInvSqrt2})) == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("average gate fidelity oracle matches the configured value") {
    NoiseModel noise;
    noise.f1 = 0.99;
    noise.f2 = 0.95;
    CHECK(std::abs(testsupport::average_gate_fidelity_1q(GateKind::H, 0, noise) - 0.99) < 1e-9);
    CHECK(std::abs(testsupport::average_gate_fidelity_1q(GateKind::RX, 1.234, noise) - 0.99) < 1e-9);
    CHECK(std::abs(testsupport::average_gate_fidelity_cz(noise) - 0.95) < 1e-9);
    NoiseModel other;
    other.f1 = 0.97;
    other.f2 = 0.9;
    CHECK(std::abs(testsupport::average_gate_fidelity_1q(GateKind::Z, 0, other) - 0.97) < 1e-9);
    CHECK(std::abs(testsupport::average_gate_fidelity_cz(other) - 0.9) < 1e-9);
}

TEST_CASE("idle dephasing") {
    NoiseModel noise;  // T2 = 10 s
    SUBCASE("dt = 0 is the identity") {
        DensityMatrix dm = DensityMatrix::single(0, InitState::PlusX);
        Eigen::MatrixXcd before = dm.matrix();
        idle_dephase(dm, 0, 0, noise);
        CHECK((dm.matrix() - before).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("one T2 scales coherence by 1/e") {
        DensityMatrix dm = DensityMatrix::single(0, InitState::PlusX);
        idle_dephase(dm, 0, noise.t2_ns, noise);
        CHECK(dm.matrix()(0, 1).real() == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));
    }
    SUBCASE("diagonal states are unaffected") {
        DensityMatrix dm = DensityMatrix::single(0, InitState::Zero);
        idle_dephase(dm, 0, 123'456'789, noise);
        CHECK(dm.fidelity_with(ket({1, 0})) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("negative dt is rejected") {
        DensityMatrix dm = DensityMatrix::single(0, InitState::Zero);
        CHECK_THROWS_AS(idle_dephase(dm, 0, -1, noise), std::invalid_argument);
    }
    SUBCASE("composition") {
        Rng rng(17);
        for (int trial = 0; trial < 25; ++trial) {
            Duration t1 = static_cast<Duration>(rng.below(2'000'000'000));
            Duration t2 = static_cast<Duration>(rng.below(2'000'000'000));
            DensityMatrix a = DensityMatrix::single(0, InitState::PlusY);
            DensityMatrix b = a;
            idle_dephase(a, 0, t1, noise);
            idle_dephase(a, 0, t2, noise);
            idle_dephase(b, 0, t1 + t2, noise);
            CHECK((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
}

TEST_CASE("Werner pairs") {
    SUBCASE("fidelity 1 is the Bell state") {
        NoiseModel n;
        n.pair_fidelity = 1.0;
        DensityMatrix dm = make_epr(n, 0, 1);
        CHECK(dm.fidelity_with(phi_plus()) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("configured fidelity is reproduced") {
        NoiseModel n;
        n.pair_fidelity = 0.95;
        DensityMatrix dm = make_epr(n, 0, 1);
        CHECK(std::abs(dm.fidelity_with(phi_plus()) - 0.95) < 1e-12);
    }
    SUBCASE("fidelity 1/4 is maximally mixed") {
        NoiseModel n;
        n.pair_fidelity = 0.25;
        DensityMatrix dm = make_epr(n, 0, 1);
        CHECK((dm.matrix() - Eigen::Matrix4cd::Identity() * 0.25).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("projective measurement basics") {
    SUBCASE("|0> in Z is deterministic") {
        DensityMatrix dm = DensityMatrix::single(0, InitState::Zero);
        auto [p0, post] = dm.project(0, Basis::Z, 0);
        CHECK(p0 == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("|+> in X is deterministic") {
        DensityMatrix dm = DensityMatrix::single(0, InitState::PlusX);
        auto [p0, post] = dm.project(0, Basis::X, 0);
        CHECK(p0 == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("Werner pair measured in Z on both sides agrees with 0.95 + 0.05/3") {
        NoiseModel n;
        n.pair_fidelity = 0.95;
        DensityMatrix dm = make_epr(n, 0, 1);
        double agree = 0;
        for (int first = 0; first < 2; ++first) {
            auto [p, post] = dm.project(0, Basis::Z, first);
            auto [p2, post2] = post.project(1, Basis::Z, first);
            agree += p * p2;
        }
        CHECK(agree == doctest::Approx(0.95 + 0.05 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("rotation merging consistency on random angles") {
    NoiseModel ideal;
    ideal.f1 = 1.0;
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        double a = rng.uniform() * 4 * M_PI - 2 * M_PI;
        double b = rng.uniform() * 4 * M_PI - 2 * M_PI;
        DensityMatrix two = DensityMatrix::single(0, InitState::PlusY);
        apply_gate(two, GateKind::RX, 0, -1, a, ideal);
        apply_gate(two, GateKind::RX, 0, -1, b, ideal);
        DensityMatrix one = DensityMatrix::single(0, InitState::PlusY);
        apply_gate(one, GateKind::RX, 0, -1, a + b, ideal);
        CHECK((two.matrix() - one.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("density-matrix invariants hold under random noisy circuits") {
    Rng rng(31);
    NoiseModel noise;
    noise.f1 = 0.98;
    noise.f2 = 0.94;
    for (int circuit = 0; circuit < 200; ++circuit) {
        DensityMatrix dm = make_epr(noise, 0, 1);
        DensityMatrix extra = DensityMatrix::single(2, InitState::PlusY);
        dm = DensityMatrix::merged(dm, extra);
        for (int op = 0; op < 12; ++op) {
            QKey q = static_cast<QKey>(rng.below(3));
            switch (rng.below(5)) {
                case 0: apply_gate(dm, GateKind::H, q, -1, 0, noise); break;
                case 1: apply_gate(dm, GateKind::RX, q, -1, rng.uniform() * 6.28, noise); break;
                case 2: apply_gate(dm, GateKind::RZ, q, -1, rng.uniform() * 6.28, noise); break;
                case 3: {
                    QKey q2 = static_cast<QKey>((q + 1 + rng.below(2)) % 3);
                    apply_gate(dm, GateKind::CZ, q, q2, 0, noise);
                    break;
                }
                default: idle_dephase(dm, q, static_cast<Duration>(rng.below(1'000'000'000)), noise);
            }
            REQUIRE(dm.check_invariants(1e-9));
        }
        int outcome = dm.measure(0, Basis::X, rng.uniform());
        CHECK((outcome == 0 || outcome == 1));
        REQUIRE(dm.check_invariants(1e-9));
    }
}
