#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qnp/program.hpp"

namespace qnp {

/// Gate/link noise parameters (trapped-ion defaults).
struct NoiseModel {
    double f1 = 0.99;                       // single-qubit gate fidelity
    double f2 = 0.95;                       // two-qubit gate fidelity
    Duration t2_ns = 10'000'000'000;        // dephasing time
    double pair_fidelity = 0.95;            // EPR pair fidelity
    Duration d1_ns = 26'600;                // 1q gate duration
    Duration d2_ns = 107'000;               // 2q gate duration

    bool valid() const {
        return f1 > 0 && f1 <= 1 && f2 > 0 && f2 <= 1 && pair_fidelity > 0 &&
               pair_fidelity <= 1 && t2_ns > 0 && d1_ns > 0 && d2_ns > 0;
    }

    // Depolarizing probabilities calibrated so the average gate fidelity
    // over Haar-random inputs equals the configured value:
    // F_avg = 1 - p (d-1)/d  =>  p = d (1-F) / (d-1).
    double p_depol_1q() const { return 2.0 * (1.0 - f1); }
    double p_depol_2q() const { return 4.0 * (1.0 - f2) / 3.0; }
};

using QKey = int64_t;  // global qubit identity within one simulation

Eigen::Matrix2cd gate_matrix_1q(GateKind g, double angle = 0.0);
Eigen::Matrix4cd gate_matrix_2q(GateKind g);
Eigen::Vector2cd init_state_vector(InitState s);
Basis basis_of(InitState s);
int expected_outcome(InitState s);  // outcome of measuring the state in its own basis

/// Mixed state over a set of qubits. Entries are indexed with qubit
/// position p occupying bit p of the row/column index.
class DensityMatrix {
public:
    DensityMatrix() = default;

    static DensityMatrix single(QKey q, InitState s);
    static DensityMatrix single(QKey q, const Eigen::Vector2cd& psi);
    /// Werner state W(F) = F |Phi+><Phi+| + (1-F)/3 (I - |Phi+><Phi+|).
    static DensityMatrix werner(QKey qa, QKey qb, double fidelity);
    static DensityMatrix merged(const DensityMatrix& a, const DensityMatrix& b);

    int num_qubits() const { return static_cast<int>(keys_.size()); }
    long dim() const { return m_.rows(); }
    bool has(QKey q) const { return position(q) >= 0; }
    int position(QKey q) const;
    const std::vector<QKey>& keys() const { return keys_; }
    const Eigen::MatrixXcd& matrix() const { return m_; }
    Eigen::MatrixXcd& matrix() { return m_; }

    void apply_unitary1(QKey q, const Eigen::Matrix2cd& u);
    /// u acts on |ab> basis ordered with qa as the high bit.
    void apply_unitary2(QKey qa, QKey qb, const Eigen::Matrix4cd& u);
    void depolarize1(QKey q, double p);
    void depolarize2(QKey qa, QKey qb, double p);
    /// Scales Z-basis off-diagonals of one qubit by `factor`.
    void dephase(QKey q, double factor);

    /// Probability of `outcome` plus the normalized post-state with the
    /// qubit removed. The post-state is empty when prob is 0.
    std::pair<double, DensityMatrix> project(QKey q, Basis basis, int outcome) const;
    /// Samples an outcome with uniform draw u in [0,1); removes the qubit.
    int measure(QKey q, Basis basis, double u);
    /// Traces out a qubit (for QFree on possibly-entangled qubits).
    void remove(QKey q);

    double trace_real() const;
    double fidelity_with(const Eigen::VectorXcd& psi) const;
    /// Hermitian within tol, trace 1 within tol, min eigenvalue > -tol.
    bool check_invariants(double tol = 1e-9) const;

private:
    Eigen::MatrixXcd m_;
    std::vector<QKey> keys_;  // keys_[p] = qubit at bit position p

    void rotate_to_z(QKey q, Basis basis);
};

/// Ideal unitary followed by a depolarizing channel on the acted qubits,
/// calibrated to the model's gate fidelity. Fidelity 1 reduces to the
/// ideal unitary exactly.
void apply_gate(DensityMatrix& rho, GateKind g, QKey q0, QKey q1, double angle,
                const NoiseModel& noise);

/// exp(-dt/T2) decay of the qubit's Z-basis coherences. dt < 0 throws.
void idle_dephase(DensityMatrix& rho, QKey q, Duration dt, const NoiseModel& noise);

DensityMatrix make_epr(const NoiseModel& noise, QKey qa, QKey qb);

}  // namespace qnp
