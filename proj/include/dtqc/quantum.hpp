// Copyright 2026 The dtqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exact Lindblad dynamics of N qubits in the symmetric J = N/2 sector coupled
// to a truncated cavity mode with photon loss.
//
// Basis ordering is spin (outer) x Fock (inner): index = k (n_max + 1) + n,
// where k = 0..N labels m = N/2 - k and n = 0..n_max is the photon number.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dtqc/errors.hpp"
#include "dtqc/io.hpp"
#include "dtqc/model.hpp"

namespace dtqc {

using cplx = std::complex<double>;
using SparseReal = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseCplx = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Largest Hilbert-space dimension (N + 1)(n_max + 1) accepted without an override.
inline constexpr int default_max_dim = 1024;

/// Photon population of the two highest Fock levels above which a run is
/// considered truncation-limited.
inline constexpr double default_tail_threshold = 1e-6;

/// Default Fock cutoff for a given qubit count. The superradiant transient
/// from |+>^N populates roughly N photons with a long tail; 20 + 5N keeps the
/// top two levels below 1e-6 up to N = 10.
inline int default_n_max(int n_qubits) { return 20 + 5 * n_qubits; }

/// Thrown when the Fock cutoff is too small for the populated photon states.
class TruncationError : public std::runtime_error {
public:
    TruncationError(const std::string& what, double tail, int suggested_n_max)
        : std::runtime_error(what), tail_(tail), suggested_n_max_(suggested_n_max) {}
    double tail() const noexcept { return tail_; }
    int suggested_n_max() const noexcept { return suggested_n_max_; }

private:
    double tail_;
    int suggested_n_max_;
};

/// Throws ResourceError when (N + 1)(n_max + 1) exceeds max_dim.
inline void check_dimension(int n_qubits, int n_max, int max_dim) {
    const long long dim = static_cast<long long>(n_qubits + 1) * (n_max + 1);
    if (dim > max_dim) {
        std::ostringstream msg;
        msg << "Hilbert space dimension " << dim << " = (N+1)(n_max+1) with N = " << n_qubits
            << ", n_max = " << n_max << " exceeds the cap " << max_dim
            << "; lower N or n_max, or raise the cap (max_dim / TQC_MAX_DIM)";
        throw ResourceError(msg.str());
    }
}

/// Collective spin and cavity operators, both on their own factors and
/// lifted to the product space. Immutable after construction.
class OperatorSet {
public:
    OperatorSet(int n_qubits, int n_max, int max_dim = default_max_dim) : n_qubits_(n_qubits), n_max_(n_max) {
        if (n_qubits < 1) throw DomainError("build_operators: N must be >= 1");
        if (n_max < 4) throw DomainError("build_operators: n_max must be >= 4");
        check_dimension(n_qubits, n_max, max_dim);
        build();
    }

    int n_qubits() const noexcept { return n_qubits_; }
    int n_max() const noexcept { return n_max_; }
    int spin_dim() const noexcept { return n_qubits_ + 1; }
    int fock_dim() const noexcept { return n_max_ + 1; }
    int dim() const noexcept { return spin_dim() * fock_dim(); }

    // Factor-space operators.
    const Eigen::MatrixXcd& spin_x() const noexcept { return sx_; }
    const Eigen::MatrixXcd& spin_y() const noexcept { return sy_; }
    const Eigen::MatrixXcd& spin_z() const noexcept { return sz_; }
    const Eigen::MatrixXd& fock_a() const noexcept { return fa_; }

    // Product-space operators.
    const SparseCplx& Jx() const noexcept { return Jx_; }
    const SparseCplx& Jy() const noexcept { return Jy_; }
    const SparseCplx& Jz() const noexcept { return Jz_; }
    const SparseCplx& a() const noexcept { return a_; }
    const SparseCplx& a_dag() const noexcept { return adag_; }
    const SparseCplx& n_op() const noexcept { return n_; }

    /// Jx (a + a^dag), the real coupling operator.
    const SparseReal& coupling() const noexcept { return coupling_; }
    /// Photon number of each basis state.
    const Eigen::VectorXd& photon_number() const noexcept { return photons_; }
    /// m quantum number of each basis state.
    const Eigen::VectorXd& spin_m() const noexcept { return m_; }

    /// Hamiltonian omega a^dag a + omega0 Jz + (2 lambda / sqrt N)(a + a^dag) Jx.
    SparseCplx hamiltonian(double lambda_t, const ModelParams& params) const {
        const double g = 2.0 * lambda_t / std::sqrt(static_cast<double>(n_qubits_));
        SparseCplx h = (params.omega * n_) + (params.omega0 * Jz_);
        SparseCplx c = coupling_.cast<cplx>();
        h += g * c;
        return h;
    }

private:
    void build() {
        const int ds = spin_dim(), df = fock_dim();
        const double J = 0.5 * n_qubits_;

        // J+ |m> = sqrt(J(J+1) - m(m+1)) |m+1>; index k holds m = J - k.
        Eigen::MatrixXd jp = Eigen::MatrixXd::Zero(ds, ds);
        Eigen::MatrixXd jz = Eigen::MatrixXd::Zero(ds, ds);
        for (int k = 0; k < ds; ++k) {
            const double m = J - k;
            jz(k, k) = m;
            if (k > 0) jp(k - 1, k) = std::sqrt(J * (J + 1.0) - m * (m + 1.0));
        }
        const Eigen::MatrixXd jm = jp.transpose();
        sx_ = (0.5 * (jp + jm)).cast<cplx>();
        sy_ = (jp - jm).cast<cplx>() * cplx(0.0, -0.5);
        sz_ = jz.cast<cplx>();

        fa_ = Eigen::MatrixXd::Zero(df, df);
        for (int n = 1; n < df; ++n) fa_(n - 1, n) = std::sqrt(static_cast<double>(n));

        Jx_ = kron_spin(sx_);
        Jy_ = kron_spin(sy_);
        Jz_ = kron_spin(sz_);
        a_ = kron_fock(fa_.cast<cplx>());
        adag_ = SparseCplx(a_.adjoint());
        n_ = kron_fock((fa_.transpose() * fa_).cast<cplx>());

        const Eigen::MatrixXd x = fa_ + fa_.transpose();
        const Eigen::MatrixXd jx = sx_.real();
        std::vector<Eigen::Triplet<double>> trip;
        for (int s1 = 0; s1 < ds; ++s1)
            for (int s2 = 0; s2 < ds; ++s2) {
                if (jx(s1, s2) == 0.0) continue;
                for (int n1 = 0; n1 < df; ++n1)
                    for (int n2 = 0; n2 < df; ++n2)
                        if (x(n1, n2) != 0.0) trip.emplace_back(s1 * df + n1, s2 * df + n2, jx(s1, s2) * x(n1, n2));
            }
        coupling_ = SparseReal(dim(), dim());
        coupling_.setFromTriplets(trip.begin(), trip.end());

        photons_.resize(dim());
        m_.resize(dim());
        for (int s = 0; s < ds; ++s)
            for (int n = 0; n < df; ++n) {
                photons_(s * df + n) = n;
                m_(s * df + n) = J - s;
            }
    }

    SparseCplx kron_spin(const Eigen::MatrixXcd& op) const {
        const int ds = spin_dim(), df = fock_dim();
        std::vector<Eigen::Triplet<cplx>> trip;
        for (int s1 = 0; s1 < ds; ++s1)
            for (int s2 = 0; s2 < ds; ++s2)
                if (op(s1, s2) != cplx(0.0))
                    for (int n = 0; n < df; ++n) trip.emplace_back(s1 * df + n, s2 * df + n, op(s1, s2));
        SparseCplx out(dim(), dim());
        out.setFromTriplets(trip.begin(), trip.end());
        return out;
    }

    SparseCplx kron_fock(const Eigen::MatrixXcd& op) const {
        const int ds = spin_dim(), df = fock_dim();
        std::vector<Eigen::Triplet<cplx>> trip;
        for (int s = 0; s < ds; ++s)
            for (int n1 = 0; n1 < df; ++n1)
                for (int n2 = 0; n2 < df; ++n2)
                    if (op(n1, n2) != cplx(0.0)) trip.emplace_back(s * df + n1, s * df + n2, op(n1, n2));
        SparseCplx out(dim(), dim());
        out.setFromTriplets(trip.begin(), trip.end());
        return out;
    }

    int n_qubits_;
    int n_max_;
    Eigen::MatrixXcd sx_, sy_, sz_;
    Eigen::MatrixXd fa_;
    SparseCplx Jx_, Jy_, Jz_, a_, adag_, n_;
    SparseReal coupling_;
    Eigen::VectorXd photons_;
    Eigen::VectorXd m_;
};

inline OperatorSet build_operators(int n_qubits, int n_max, int max_dim = default_max_dim) {
    return OperatorSet(n_qubits, n_max, max_dim);
}

/// Tr(op rho) for a sparse operator.
inline cplx expectation(const SparseCplx& op, const Eigen::MatrixXcd& rho) {
    cplx acc = 0.0;
    for (int i = 0; i < op.outerSize(); ++i)
        for (SparseCplx::InnerIterator it(op, i); it; ++it) acc += it.value() * rho(it.col(), i);
    return acc;
}

/// Density operator on the spin x Fock product space.
class DensityMatrix {
public:
    DensityMatrix(int n_qubits, int n_max, Eigen::MatrixXcd rho)
        : n_qubits_(n_qubits), n_max_(n_max), rho_(std::move(rho)) {
        const auto d = static_cast<Eigen::Index>(n_qubits + 1) * (n_max + 1);
        if (rho_.rows() != d || rho_.cols() != d) throw DomainError("DensityMatrix: dimension mismatch");
    }

    /// |spin> (x) |photon> projector from factor amplitudes (normalized here).
    static DensityMatrix product(int n_qubits, int n_max, const Eigen::VectorXcd& spin, const Eigen::VectorXcd& photon) {
        if (spin.size() != n_qubits + 1 || photon.size() != n_max + 1)
            throw DomainError("DensityMatrix::product: factor dimension mismatch");
        Eigen::VectorXcd psi(spin.size() * photon.size());
        for (Eigen::Index s = 0; s < spin.size(); ++s) psi.segment(s * photon.size(), photon.size()) = spin(s) * photon;
        const double nrm = psi.norm();
        if (!(nrm > 0.0)) throw DomainError("DensityMatrix::product: zero state");
        psi /= nrm;
        return DensityMatrix(n_qubits, n_max, psi * psi.adjoint());
    }

    int n_qubits() const noexcept { return n_qubits_; }
    int n_max() const noexcept { return n_max_; }
    Eigen::Index dim() const noexcept { return rho_.rows(); }
    const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }
    Eigen::MatrixXcd& matrix() noexcept { return rho_; }

    double trace() const { return rho_.trace().real(); }
    double purity() const { return (rho_ * rho_).trace().real(); }
    double hermiticity_deviation() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    cplx expect(const SparseCplx& op) const { return expectation(op, rho_); }

    /// Population of the two highest Fock levels.
    double tail_population() const { return tail_population(rho_, n_qubits_, n_max_); }

    static double tail_population(const Eigen::MatrixXcd& rho, int n_qubits, int n_max) {
        const int df = n_max + 1;
        double tail = 0.0;
        for (int s = 0; s <= n_qubits; ++s)
            for (int n = n_max - 1; n <= n_max; ++n) tail += rho(s * df + n, s * df + n).real();
        return tail;
    }

private:
    int n_qubits_;
    int n_max_;
    Eigen::MatrixXcd rho_;
};

/// Amplitudes sqrt(C(N,k)) / 2^(N/2) of |+>^N in the Jz basis (k = N/2 - m).
inline Eigen::VectorXcd polarized_x_amplitudes(int n_qubits) {
    Eigen::VectorXcd v(n_qubits + 1);
    for (int k = 0; k <= n_qubits; ++k) {
        const double log_binom = std::lgamma(n_qubits + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n_qubits - k + 1.0);
        v(k) = std::exp(0.5 * log_binom - 0.5 * n_qubits * std::log(2.0));
    }
    return v;
}

/// Truncated coherent state |alpha>, renormalized on the cutoff space.
inline Eigen::VectorXcd coherent_amplitudes(cplx alpha, int n_max) {
    Eigen::VectorXcd v(n_max + 1);
    v(0) = 1.0;
    for (int n = 1; n <= n_max; ++n) v(n) = v(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return v / v.norm();
}

inline Eigen::VectorXcd fock_vacuum(int n_max) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n_max + 1);
    v(0) = 1.0;
    return v;
}

/// All spins along +x, cavity in vacuum.
inline DensityMatrix initial_state(int n_qubits, int n_max, int max_dim = default_max_dim) {
    if (n_qubits < 1) throw DomainError("initial_state: N must be >= 1");
    if (n_max < 4) throw DomainError("initial_state: n_max must be >= 4");
    check_dimension(n_qubits, n_max, max_dim);
    return DensityMatrix::product(n_qubits, n_max, polarized_x_amplitudes(n_qubits), fock_vacuum(n_max));
}

namespace detail {
// Plain complex product; std::complex operator* defers to the Annex G
// NaN-recovery path, which blocks vectorization.
inline cplx cmul(cplx a, cplx b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}
}  // namespace detail

/// Lindblad generator with photon loss.
///
/// Works column by column on the column-major rho. With H = E + g X
/// (E diagonal, X = Jx (a + a^dag) real symmetric, g = 2 lambda / sqrt N):
///
///   out(:, j) = (A + conj(A_j)) rho(:, j) - i g (X rho)(:, j)
///               + i g sum_k X(j, k) rho(:, k) + kappa c_j c rho(shifted, j + 1)
///
/// where A = -i E - kappa/2 n and c_i = sqrt(n_i + 1) (zero at the cutoff).
/// X couples i to i + delta for the four shifts delta = +-(n_max + 1) +- 1,
/// so both products reduce to contiguous shifted streams.
class LindbladGenerator {
public:
    LindbladGenerator(const OperatorSet& ops, const ModelParams& params)
        : n_qubits_(ops.n_qubits()), kappa_(params.kappa) {
        const int d = ops.dim();
        const int df = ops.fock_dim();
        dim_ = d;
        diag_.resize(d);
        for (int i = 0; i < d; ++i)
            diag_[i] = cplx(-0.5 * params.kappa * ops.photon_number()(i),
                            -(params.omega * ops.photon_number()(i) + params.omega0 * ops.spin_m()(i)));
        jump_.assign(d, 0.0);
        for (int i = 0; i < d; ++i)
            if (i % df != df - 1) jump_[i] = std::sqrt(ops.photon_number()(i) + 1.0);

        const Eigen::MatrixXd jx = ops.spin_x().real();
        const int offs[4][2] = {{-1, -1}, {-1, +1}, {+1, -1}, {+1, +1}};
        for (int b = 0; b < 4; ++b) {
            const int ds = offs[b][0], dn = offs[b][1];
            Band band;
            band.shift = ds * df + dn;
            band.coef.assign(d, 0.0);
            for (int s = 0; s <= n_qubits_; ++s) {
                const int s2 = s + ds;
                if (s2 < 0 || s2 > n_qubits_) continue;
                for (int n = 0; n < df; ++n) {
                    const int n2 = n + dn;
                    if (n2 < 0 || n2 >= df) continue;
                    // (a + a^dag)_{n, n2} = sqrt(max(n, n2))
                    band.coef[s * df + n] = jx(s, s2) * std::sqrt(static_cast<double>(std::max(n, n2)));
                }
            }
            band.lo = std::max(0, -band.shift);
            band.hi = std::min(d, d - band.shift);
            bands_[b] = std::move(band);
        }
    }

    /// out = L(lambda_t) rho. out must not alias rho.
    void apply(const Eigen::MatrixXcd& rho, double lambda_t, Eigen::MatrixXcd& out) {
        const int d = dim_;
        out.resize(d, d);
        const double g = 2.0 * lambda_t / std::sqrt(static_cast<double>(n_qubits_));
        const cplx* r = rho.data();
        cplx* o = out.data();
        const cplx* diag = diag_.data();
        const double* c = jump_.data();

        const double* cf0 = bands_[0].coef.data();
        const double* cf1 = bands_[1].coef.data();
        const double* cf2 = bands_[2].coef.data();
        const double* cf3 = bands_[3].coef.data();
        const int s0 = bands_[0].shift, s1 = bands_[1].shift, s2 = bands_[2].shift, s3 = bands_[3].shift;
        // Rows whose four shifted neighbours all lie inside the column.
        const int lo = -s0, hi = d - s3;

        for (int j = 0; j < d; ++j) {
            const cplx* v = r + static_cast<std::ptrdiff_t>(j) * d;
            cplx* oj = o + static_cast<std::ptrdiff_t>(j) * d;
            const cplx aj = std::conj(diag[j]);

            // Right action of X on column j; missing neighbours contribute 0 via x = 0.
            const cplx* nb[4];
            double nx[4];
            for (int b = 0; b < 4; ++b) {
                const int k = j + bands_[b].shift;
                const bool ok = k >= 0 && k < d && bands_[b].coef[j] != 0.0;
                nb[b] = ok ? r + static_cast<std::ptrdiff_t>(k) * d : v;
                nx[b] = ok ? bands_[b].coef[j] : 0.0;
            }
            const double kc = kappa_ * c[j];
            const cplx* next = c[j] != 0.0 ? r + static_cast<std::ptrdiff_t>(j + 1) * d + 1 : v;

            auto row = [&](int i, cplx left) {
                cplx w = left - nx[0] * nb[0][i] - nx[1] * nb[1][i] - nx[2] * nb[2][i] - nx[3] * nb[3][i];
                cplx acc = detail::cmul(diag[i] + aj, v[i]);
                acc += cplx(g * w.imag(), -g * w.real());  // -i g w
                if (i < d - 1) acc += (kc * c[i]) * next[i];
                return acc;
            };
            auto left_at = [&](int i) {
                cplx left = 0.0;
                for (const Band& b : bands_)
                    if (i >= b.lo && i < b.hi) left += b.coef[i] * v[i + b.shift];
                return left;
            };

            for (int i = 0; i < std::min(lo, d); ++i) oj[i] = row(i, left_at(i));
            for (int i = lo; i < hi; ++i) {
                const cplx left = cf0[i] * v[i + s0] + cf1[i] * v[i + s1] + cf2[i] * v[i + s2] + cf3[i] * v[i + s3];
                const cplx w = left - nx[0] * nb[0][i] - nx[1] * nb[1][i] - nx[2] * nb[2][i] - nx[3] * nb[3][i];
                const cplx dv = detail::cmul(diag[i] + aj, v[i]);
                oj[i] = cplx(dv.real() + g * w.imag(), dv.imag() - g * w.real()) + (kc * c[i]) * next[i];
            }
            for (int i = std::max(hi, std::max(lo, 0)); i < d; ++i) oj[i] = row(i, left_at(i));
        }
    }

    Eigen::MatrixXcd operator()(const Eigen::MatrixXcd& rho, double lambda_t) {
        Eigen::MatrixXcd out(rho.rows(), rho.cols());
        apply(rho, lambda_t, out);
        return out;
    }

private:
    struct Band {
        int shift = 0;
        int lo = 0;
        int hi = 0;
        std::vector<double> coef;  ///< X(i, i + shift)
    };

    int n_qubits_;
    int dim_ = 0;
    double kappa_;
    std::vector<cplx> diag_;  ///< -i E - kappa/2 n
    std::vector<double> jump_;
    std::array<Band, 4> bands_;
};

/// d rho / dt = -i[H(lambda_t), rho] + kappa D[a] rho.
inline Eigen::MatrixXcd lindblad_rhs(const DensityMatrix& rho, double lambda_t, const OperatorSet& ops,
                                     const ModelParams& params) {
    LindbladGenerator gen(ops, params);
    return gen(rho.matrix(), lambda_t);
}

/// Expectation records sampled every half period.
struct QuantumTrajectory {
    int n_qubits = 0;
    int n_max = 0;
    double period = 0.0;
    std::vector<double> times;
    std::vector<double> jx, jy, jz;  ///< <J_mu> / N
    std::vector<double> n_photon;    ///< <a^dag a>
    std::vector<double> tail_pop;    ///< population of the two top Fock levels
    double max_trace_drift = 0.0;
    double max_hermiticity_dev = 0.0;
    double min_eigenvalue = 0.0;  ///< only meaningful when positivity checks ran
    Eigen::MatrixXcd final_rho;

    std::size_t size() const noexcept { return times.size(); }

    std::vector<double> times_in_periods() const {
        std::vector<double> out(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) out[i] = times[i] / period;
        return out;
    }
};

struct EvolveOptions {
    double tail_threshold = default_tail_threshold;
    bool abort_on_truncation = true;
    double trace_tolerance = 1e-6;
    bool check_positivity = false;
    double positivity_tolerance = 1e-5;
};

namespace detail {
inline void record_sample(QuantumTrajectory& tr, const OperatorSet& ops, const Eigen::MatrixXcd& rho, double t) {
    const double inv_n = 1.0 / ops.n_qubits();
    tr.times.push_back(t);
    tr.jx.push_back(expectation(ops.Jx(), rho).real() * inv_n);
    tr.jy.push_back(expectation(ops.Jy(), rho).real() * inv_n);
    tr.jz.push_back(expectation(ops.Jz(), rho).real() * inv_n);
    tr.n_photon.push_back(expectation(ops.n_op(), rho).real());
    tr.tail_pop.push_back(DensityMatrix::tail_population(rho, ops.n_qubits(), ops.n_max()));
}

inline int suggest_n_max(int n_max) { return n_max + std::max(10, n_max / 2); }
}  // namespace detail

/// RK4 integration of the master equation for n_periods drive periods with
/// dt = T / dt_per_period (positive even integer, so steps align with the
/// switching times). Trace, Hermiticity and Fock-tail population are checked
/// once per period.
inline QuantumTrajectory evolve(const DensityMatrix& rho0, const DriveSchedule& schedule, const ModelParams& params,
                                const OperatorSet& ops, std::int64_t n_periods, std::int64_t dt_per_period = 500,
                                const EvolveOptions& opt = {}) {
    if (n_periods < 1) throw ConfigError("evolve: n_periods must be >= 1");
    if (dt_per_period < 2 || dt_per_period % 2 != 0)
        throw ConfigError("evolve: dt_per_period must be a positive even integer");
    if (rho0.n_qubits() != ops.n_qubits() || rho0.n_max() != ops.n_max())
        throw DomainError("evolve: state and operators describe different spaces");

    const std::int64_t per_half = dt_per_period / 2;
    const double half = schedule.half_period();
    const double dt = schedule.period() / static_cast<double>(dt_per_period);
    const auto d = rho0.dim();

    QuantumTrajectory tr;
    tr.n_qubits = ops.n_qubits();
    tr.n_max = ops.n_max();
    tr.period = schedule.period();

    LindbladGenerator gen(ops, params);
    Eigen::MatrixXcd rho = rho0.matrix();
    Eigen::MatrixXcd k(d, d), acc(d, d), stage(d, d);
    tr.min_eigenvalue = opt.check_positivity ? rho0.min_eigenvalue() : 0.0;
    detail::record_sample(tr, ops, rho, 0.0);

    auto check = [&](double t) {
        const double drift = std::fabs(rho.trace().real() - 1.0);
        tr.max_trace_drift = std::fmax(tr.max_trace_drift, drift);
        tr.max_hermiticity_dev = std::fmax(tr.max_hermiticity_dev, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        if (!std::isfinite(drift)) throw IntegrationError("master equation produced a non-finite state", t);
        if (drift > opt.trace_tolerance)
            throw IntegrationError("trace drift " + io::format_double(drift) +
                                       " exceeds tolerance; use a smaller time step (larger dt_per_period)",
                                   t);
        const double tail = tr.tail_pop.back();
        if (opt.abort_on_truncation && tail > opt.tail_threshold) {
            const int suggested = detail::suggest_n_max(ops.n_max());
            throw TruncationError("Fock tail population " + io::format_double(tail) + " exceeds " +
                                      io::format_double(opt.tail_threshold) + " at t = " + io::format_double(t) +
                                      "; rerun with n_max >= " + std::to_string(suggested),
                                  tail, suggested);
        }
        if (opt.check_positivity) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
            tr.min_eigenvalue = std::fmin(tr.min_eigenvalue, es.eigenvalues().minCoeff());
            if (tr.min_eigenvalue < -opt.positivity_tolerance)
                throw IntegrationError("density matrix lost positivity; use a smaller time step", t);
        }
    };

    for (std::int64_t h = 0; h < 2 * n_periods; ++h) {
        const double lam = schedule.half_period_amplitude(h);
        for (std::int64_t j = 0; j < per_half; ++j) {
            gen.apply(rho, lam, k);
            acc = k;
            stage = rho + (0.5 * dt) * k;
            gen.apply(stage, lam, k);
            acc += 2.0 * k;
            stage = rho + (0.5 * dt) * k;
            gen.apply(stage, lam, k);
            acc += 2.0 * k;
            stage = rho + dt * k;
            gen.apply(stage, lam, k);
            acc += k;
            rho += (dt / 6.0) * acc;
        }
        const double t = static_cast<double>(h + 1) * half;
        detail::record_sample(tr, ops, rho, t);
        if (h % 2 == 1) check(t);
    }
    tr.final_rho = std::move(rho);
    return tr;
}

inline QuantumTrajectory evolve(const DensityMatrix& rho0, const DriveSchedule& schedule, const ModelParams& params,
                                std::int64_t n_periods, std::int64_t dt_per_period = 500,
                                const EvolveOptions& opt = {}, int max_dim = default_max_dim) {
    const OperatorSet ops(rho0.n_qubits(), rho0.n_max(), max_dim);
    return evolve(rho0, schedule, params, ops, n_periods, dt_per_period, opt);
}

struct TruncationReport {
    bool pass = true;
    double max_tail = 0.0;
    std::string message;
};

/// Passes iff every recorded tail population is below threshold.
inline TruncationReport check_truncation(const QuantumTrajectory& tr, double threshold = default_tail_threshold) {
    TruncationReport r;
    for (double t : tr.tail_pop) r.max_tail = std::fmax(r.max_tail, t);
    r.pass = r.max_tail < threshold;
    std::ostringstream msg;
    if (r.pass) {
        msg << "truncation ok: max tail population " << r.max_tail << " < " << threshold;
    } else {
        msg << "truncation failed: max tail population " << r.max_tail << " >= " << threshold
            << " at n_max = " << tr.n_max << "; rerun with n_max >= " << detail::suggest_n_max(tr.n_max);
    }
    r.message = msg.str();
    return r;
}

/// CSV with header t,jx,jy,jz,n_photon,tail_pop.
inline void write_quantum_csv(std::ostream& out, const QuantumTrajectory& tr, bool time_in_periods = false) {
    out << "t,jx,jy,jz,n_photon,tail_pop\n";
    const double unit = time_in_periods ? tr.period : 1.0;
    for (std::size_t i = 0; i < tr.size(); ++i)
        io::write_row(out, tr.times[i] / unit, tr.jx[i], tr.jy[i], tr.jz[i], tr.n_photon[i], tr.tail_pop[i]);
}

}  // namespace dtqc
