#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "qnp/quantum.hpp"

namespace qnp::testsupport {

// Independent average-gate-fidelity oracle via process tomography of the
// implemented channel: F_avg = (d F_pro + 1) / (d + 1) with
// F_pro = (1/d^2) sum_{m,n} <m| U+ E(|m><n|) U |n>.
// E(|m><n|) is reconstructed from apply_gate on four physical states, so
// the oracle shares nothing with the calibration formula it verifies.

inline double average_gate_fidelity_1q(GateKind g, double angle, const NoiseModel& noise) {
    using cd = std::complex<double>;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2cd u = gate_matrix_1q(g, angle);
    auto channel = [&](const Eigen::Vector2cd& psi) {
        DensityMatrix dm = DensityMatrix::single(0, psi);
        apply_gate(dm, g, 0, -1, angle, noise);
        return dm.matrix();
    };
    Eigen::Vector2cd basis[2];
    basis[0] << 1, 0;
    basis[1] << 0, 1;
    Eigen::Matrix2cd e[2][2];
    for (int m = 0; m < 2; ++m) e[m][m] = channel(basis[m]);
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
            if (m == n) continue;
            Eigen::Vector2cd plus = (basis[m] + basis[n]) * inv_sqrt2;
            Eigen::Vector2cd plusi = (basis[m] + cd(0, 1) * basis[n]) * inv_sqrt2;
            e[m][n] = channel(plus) + cd(0, 1) * channel(plusi) -
                      (1.0 + cd(0, 1)) * (e[m][m] + e[n][n]) * 0.5;
        }
    cd fpro = 0;
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) fpro += (u.adjoint() * e[m][n] * u)(m, n);
    fpro /= 4.0;
    return (2.0 * fpro.real() + 1.0) / 3.0;
}

inline double average_gate_fidelity_cz(const NoiseModel& noise) {
    using cd = std::complex<double>;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Eigen::Matrix4cd u = gate_matrix_2q(GateKind::CZ);
    auto channel = [&](const Eigen::Vector4cd& psi) {
        // arbitrary two-qubit input; CZ and the depolarizing channel are
        // symmetric in the bit order, so the index convention drops out
        Eigen::Vector2cd zero;
        zero << 1, 0;
        DensityMatrix dm = DensityMatrix::merged(DensityMatrix::single(0, zero),
                                                 DensityMatrix::single(1, zero));
        dm.matrix() = psi * psi.adjoint();
        apply_gate(dm, GateKind::CZ, 0, 1, 0, noise);
        return dm.matrix();
    };
    Eigen::Vector4cd basis[4];
    for (int i = 0; i < 4; ++i) {
        basis[i].setZero();
        basis[i](i) = 1;
    }
    Eigen::Matrix4cd e[4][4];
    for (int m = 0; m < 4; ++m) e[m][m] = channel(basis[m]);
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
            if (m == n) continue;
            Eigen::Vector4cd plus = (basis[m] + basis[n]) * inv_sqrt2;
            Eigen::Vector4cd plusi = (basis[m] + cd(0, 1) * basis[n]) * inv_sqrt2;
            e[m][n] = channel(plus) + cd(0, 1) * channel(plusi) -
                      (1.0 + cd(0, 1)) * (e[m][m] + e[n][n]) * 0.5;
        }
    cd fpro = 0;
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) fpro += (u.adjoint() * e[m][n] * u)(m, n);
    fpro /= 16.0;
    return (4.0 * fpro.real() + 1.0) / 5.0;
}

/// Closed-form success probability of the rotation experiment with k
/// noisy single-qubit gates at fidelity f (depolarizing parameter
/// p = 2(1-f) per gate shrinks the Bloch vector by (1-p) each time).
inline double rotation_success_oracle(int k, double f) {
    double shrink = std::pow(2.0 * f - 1.0, k);
    return (1.0 + shrink) / 2.0;
}

}  // namespace qnp::testsupport
