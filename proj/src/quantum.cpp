#include "qnp/quantum.hpp"

#include <cmath>
#include <stdexcept>

namespace qnp {

using cd = std::complex<double>;
using Eigen::Matrix2cd;
using Eigen::Matrix4cd;
using Eigen::MatrixXcd;

Matrix2cd gate_matrix_1q(GateKind g, double angle) {
    Matrix2cd u;
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    switch (g) {
        case GateKind::X: u << 0, 1, 1, 0; break;
        case GateKind::Z: u << 1, 0, 0, -1; break;
        case GateKind::H: u << inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2; break;
        case GateKind::RX: u << cd(c, 0), cd(0, -s), cd(0, -s), cd(c, 0); break;
        case GateKind::RY: u << cd(c, 0), cd(-s, 0), cd(s, 0), cd(c, 0); break;
        case GateKind::RZ:
            // diag(1, e^{i angle}); |+_theta> = RZ(theta)|+>
            u << 1, 0, 0, std::polar(1.0, angle);
            break;
        default: throw std::invalid_argument("not a 1q gate");
    }
    return u;
}

Matrix4cd gate_matrix_2q(GateKind g) {
    if (g != GateKind::CZ) throw std::invalid_argument("not a 2q gate");
    Matrix4cd u = Matrix4cd::Identity();
    u(3, 3) = -1;
    return u;
}

Eigen::Vector2cd init_state_vector(InitState s) {
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Vector2cd v;
    switch (s) {
        case InitState::PlusX: v << r, r; break;
        case InitState::MinusX: v << r, -r; break;
        case InitState::PlusY: v << r, cd(0, r); break;
        case InitState::MinusY: v << r, cd(0, -r); break;
        case InitState::PlusZ:
        case InitState::Zero: v << 1, 0; break;
        case InitState::MinusZ: v << 0, 1; break;
    }
    return v;
}

Basis basis_of(InitState s) {
    switch (s) {
        case InitState::PlusX:
        case InitState::MinusX: return Basis::X;
        case InitState::PlusY:
        case InitState::MinusY: return Basis::Y;
        default: return Basis::Z;
    }
}

int expected_outcome(InitState s) {
    return (s == InitState::MinusX || s == InitState::MinusY || s == InitState::MinusZ) ? 1 : 0;
}

DensityMatrix DensityMatrix::single(QKey q, InitState s) {
    return single(q, init_state_vector(s));
}

DensityMatrix DensityMatrix::single(QKey q, const Eigen::Vector2cd& psi) {
    DensityMatrix d;
    d.keys_ = {q};
    d.m_ = psi * psi.adjoint();
    return d;
}

DensityMatrix DensityMatrix::werner(QKey qa, QKey qb, double fidelity) {
    DensityMatrix d;
    d.keys_ = {qa, qb};
    Eigen::Vector4cd phi;
    phi << 1.0 / std::sqrt(2.0), 0, 0, 1.0 / std::sqrt(2.0);
    Matrix4cd proj = phi * phi.adjoint();
    d.m_ = fidelity * proj + (1.0 - fidelity) / 3.0 * (Matrix4cd::Identity() - proj);
    return d;
}

DensityMatrix DensityMatrix::merged(const DensityMatrix& a, const DensityMatrix& b) {
    DensityMatrix d;
    d.keys_ = a.keys_;
    d.keys_.insert(d.keys_.end(), b.keys_.begin(), b.keys_.end());
    const long da = a.m_.rows(), db = b.m_.rows();
    d.m_.resize(da * db, da * db);
    for (long ib = 0; ib < db; ++ib)
        for (long jb = 0; jb < db; ++jb)
            d.m_.block(ib * da, jb * da, da, da) = b.m_(ib, jb) * a.m_;
    return d;
}

int DensityMatrix::position(QKey q) const {
    for (size_t i = 0; i < keys_.size(); ++i)
        if (keys_[i] == q) return static_cast<int>(i);
    return -1;
}

void DensityMatrix::apply_unitary1(QKey q, const Matrix2cd& u) {
    int p = position(q);
    if (p < 0) throw std::invalid_argument("qubit not in state");
    const long n = m_.rows();
    const long bit = 1L << p;
    // rows: rho <- (U x I) rho
    for (long c = 0; c < n; ++c)
        for (long i = 0; i < n; ++i) {
            if (i & bit) continue;
            cd a = m_(i, c), b = m_(i | bit, c);
            m_(i, c) = u(0, 0) * a + u(0, 1) * b;
            m_(i | bit, c) = u(1, 0) * a + u(1, 1) * b;
        }
    // cols: rho <- rho (U x I)^dag
    for (long r = 0; r < n; ++r)
        for (long j = 0; j < n; ++j) {
            if (j & bit) continue;
            cd a = m_(r, j), b = m_(r, j | bit);
            m_(r, j) = a * std::conj(u(0, 0)) + b * std::conj(u(0, 1));
            m_(r, j | bit) = a * std::conj(u(1, 0)) + b * std::conj(u(1, 1));
        }
}

void DensityMatrix::apply_unitary2(QKey qa, QKey qb, const Matrix4cd& u) {
    int pa = position(qa), pb = position(qb);
    if (pa < 0 || pb < 0) throw std::invalid_argument("qubit not in state");
    const long n = m_.rows();
    const long ba = 1L << pa, bb = 1L << pb;
    auto sub = [&](long base, int k) { return base | ((k >> 1) ? ba : 0) | ((k & 1) ? bb : 0); };
    for (long c = 0; c < n; ++c)
        for (long i = 0; i < n; ++i) {
            if (i & (ba | bb)) continue;
            cd v[4];
            for (int k = 0; k < 4; ++k) v[k] = m_(sub(i, k), c);
            for (int k = 0; k < 4; ++k) {
                cd acc = 0;
                for (int l = 0; l < 4; ++l) acc += u(k, l) * v[l];
                m_(sub(i, k), c) = acc;
            }
        }
    for (long r = 0; r < n; ++r)
        for (long j = 0; j < n; ++j) {
            if (j & (ba | bb)) continue;
            cd v[4];
            for (int k = 0; k < 4; ++k) v[k] = m_(r, sub(j, k));
            for (int k = 0; k < 4; ++k) {
                cd acc = 0;
                for (int l = 0; l < 4; ++l) acc += v[l] * std::conj(u(k, l));
                m_(r, sub(j, k)) = acc;
            }
        }
}

void DensityMatrix::depolarize1(QKey q, double p) {
    if (p <= 0) return;
    int pos = position(q);
    const long n = m_.rows();
    const long bit = 1L << pos;
    MatrixXcd mixed = MatrixXcd::Zero(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            if ((i & bit) != (j & bit)) continue;
            // 1/2 sum_b rho[i:b, j:b]
            cd s = m_(i & ~bit, j & ~bit) + m_(i | bit, j | bit);
            mixed(i, j) = 0.5 * s;
        }
    m_ = (1.0 - p) * m_ + p * mixed;
}

void DensityMatrix::depolarize2(QKey qa, QKey qb, double p) {
    if (p <= 0) return;
    const long ba = 1L << position(qa), bb = 1L << position(qb);
    const long mask = ba | bb;
    const long n = m_.rows();
    MatrixXcd mixed = MatrixXcd::Zero(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            if ((i & mask) != (j & mask)) continue;
            cd s = 0;
            for (int k = 0; k < 4; ++k) {
                long ext = ((k >> 1) ? ba : 0) | ((k & 1) ? bb : 0);
                s += m_((i & ~mask) | ext, (j & ~mask) | ext);
            }
            mixed(i, j) = 0.25 * s;
        }
    m_ = (1.0 - p) * m_ + p * mixed;
}

void DensityMatrix::dephase(QKey q, double factor) {
    int pos = position(q);
    if (pos < 0) throw std::invalid_argument("qubit not in state");
    const long bit = 1L << pos;
    const long n = m_.rows();
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            if ((i & bit) != (j & bit)) m_(i, j) *= factor;
}

void DensityMatrix::rotate_to_z(QKey q, Basis basis) {
    if (basis == Basis::X) {
        apply_unitary1(q, gate_matrix_1q(GateKind::H));
    } else if (basis == Basis::Y) {
        // H S^dag maps |+i>,|-i> to |0>,|1>
        Matrix2cd sdag;
        sdag << 1, 0, 0, cd(0, -1);
        apply_unitary1(q, gate_matrix_1q(GateKind::H) * sdag);
    }
}

std::pair<double, DensityMatrix> DensityMatrix::project(QKey q, Basis basis, int outcome) const {
    DensityMatrix tmp = *this;
    tmp.rotate_to_z(q, basis);
    int pos = tmp.position(q);
    const long bit = 1L << pos;
    const long n = tmp.m_.rows();
    double prob = 0;
    for (long i = 0; i < n; ++i)
        if (((i & bit) != 0) == (outcome != 0)) prob += tmp.m_(i, i).real();
    if (prob <= 1e-15) return {std::max(prob, 0.0), DensityMatrix{}};

    DensityMatrix out;
    out.keys_ = tmp.keys_;
    out.keys_.erase(out.keys_.begin() + pos);
    const long half = n / 2;
    out.m_.resize(half, half);
    auto expand = [&](long i) {
        long low = i & (bit - 1);
        long high = (i & ~(bit - 1)) << 1;
        return high | (outcome ? bit : 0) | low;
    };
    for (long i = 0; i < half; ++i)
        for (long j = 0; j < half; ++j) out.m_(i, j) = tmp.m_(expand(i), expand(j)) / prob;
    return {prob, out};
}

int DensityMatrix::measure(QKey q, Basis basis, double u) {
    auto [p0, post0] = project(q, basis, 0);
    if (u < p0 || p0 >= 1.0 - 1e-14) {
        *this = std::move(post0);
        return 0;
    }
    auto [p1, post1] = project(q, basis, 1);
    *this = std::move(post1);
    return 1;
}

void DensityMatrix::remove(QKey q) {
    int pos = position(q);
    if (pos < 0) throw std::invalid_argument("qubit not in state");
    const long bit = 1L << pos;
    const long n = m_.rows();
    const long half = n / 2;
    MatrixXcd out(half, half);
    auto expand = [&](long i, long b) {
        long low = i & (bit - 1);
        long high = (i & ~(bit - 1)) << 1;
        return high | (b ? bit : 0) | low;
    };
    for (long i = 0; i < half; ++i)
        for (long j = 0; j < half; ++j)
            out(i, j) = m_(expand(i, 0), expand(j, 0)) + m_(expand(i, 1), expand(j, 1));
    m_ = std::move(out);
    keys_.erase(keys_.begin() + pos);
}

double DensityMatrix::trace_real() const { return m_.trace().real(); }

double DensityMatrix::fidelity_with(const Eigen::VectorXcd& psi) const {
    return (psi.adjoint() * m_ * psi)(0, 0).real();
}

bool DensityMatrix::check_invariants(double tol) const {
    if (m_.rows() == 0) return true;
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() >= tol) return false;
    if (std::abs(trace_real() - 1.0) > tol) return false;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > -tol;
}

void apply_gate(DensityMatrix& rho, GateKind g, QKey q0, QKey q1, double angle,
                const NoiseModel& noise) {
    if (is_two_qubit(g)) {
        rho.apply_unitary2(q0, q1, gate_matrix_2q(g));
        rho.depolarize2(q0, q1, noise.p_depol_2q());
    } else {
        rho.apply_unitary1(q0, gate_matrix_1q(g, angle));
        rho.depolarize1(q0, noise.p_depol_1q());
    }
}

void idle_dephase(DensityMatrix& rho, QKey q, Duration dt, const NoiseModel& noise) {
    if (dt < 0) throw std::invalid_argument("negative idle time");
    if (dt == 0) return;
    double factor = std::exp(-static_cast<double>(dt) / static_cast<double>(noise.t2_ns));
    rho.dephase(q, factor);
}

DensityMatrix make_epr(const NoiseModel& noise, QKey qa, QKey qb) {
    return DensityMatrix::werner(qa, qb, noise.pair_fidelity);
}

}  // namespace qnp
