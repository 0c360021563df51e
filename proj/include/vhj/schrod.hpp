#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grid.hpp"
#include "io.hpp"
#include "parabolic.hpp"

namespace vhj {

using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

/** The generator split of du/dt = -i A u:  A = A1 + i A2 with both parts
 *  Hermitian, so that -i A u = -i A1 u + A2 u and dissipative dynamics means
 *  A2 <= 0.  Assembly validates the defining identity on random fields. */
struct SplitOperator {
    Grid grid;
    MatC A;
    MatC A1;
    MatC A2;
    double lambda_max_A2 = 0.0;  // largest (signed) eigenvalue of A2
    double norm_A1 = 0.0;        // spectral norms
    double norm_A2 = 0.0;
};

namespace detail {

/** Dense matrix of the PDE right-hand side operator on the grid stencils. */
inline Eigen::MatrixXd rhs_matrix(const LinearPdeCoefficients& co, const Grid& g) {
    const std::size_t N = g.size();
    Eigen::MatrixXd M(N, N);
    Field e(g, 0.0);
    for (std::size_t j = 0; j < N; ++j) {
        e[j] = 1.0;
        Field col = pde_rhs(e, co, 0.0, nullptr);
        for (std::size_t i = 0; i < N; ++i) M(static_cast<long>(i), static_cast<long>(j)) = col[i];
        e[j] = 0.0;
    }
    return M;
}

}  // namespace detail

inline SplitOperator assemble_A(const LinearPdeCoefficients& co, const Grid& g) {
    if (co.a_time_dependent)
        throw std::invalid_argument("assemble_A: time-dependent coefficients are handled only by "
                                    "the complexity calculators");
    co.validate();
    Eigen::MatrixXd M = detail::rhs_matrix(co, g);
    SplitOperator op;
    op.grid = g;
    op.A = cplx(0.0, 1.0) * M.cast<cplx>();
    op.A1 = 0.5 * (op.A + op.A.adjoint());
    op.A2 = (op.A - op.A.adjoint()) / cplx(0.0, 2.0);

    // validate the defining identity -iA f = RHS f on three random fields
    std::mt19937_64 rng(0x5eed5u);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        Field f(g);
        for (auto& x : f.values) x = gauss(rng);
        Field want = detail::pde_rhs(f, co, 0.0, nullptr);
        VecC fv(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) fv[static_cast<long>(i)] = f[i];
        VecC got = cplx(0.0, -1.0) * (op.A * fv);
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            err = std::max(err, std::abs(got[static_cast<long>(i)] - want[i]));
            scale = std::max(scale, std::abs(want[i]));
        }
        if (err > 1e-9 * std::max(1.0, scale))
            throw std::runtime_error("assemble_A: -iA does not reproduce the PDE right-hand side");
    }

    Eigen::SelfAdjointEigenSolver<MatC> es1(op.A1);
    Eigen::SelfAdjointEigenSolver<MatC> es2(op.A2);
    op.norm_A1 = es1.eigenvalues().cwiseAbs().maxCoeff();
    op.norm_A2 = es2.eigenvalues().cwiseAbs().maxCoeff();
    op.lambda_max_A2 = es2.eigenvalues().maxCoeff();
    return op;
}

/** Discretised ancilla register: periodic xi-interval [-L, R) with N midpoint
 *  samples xi_j = -L + (j + 1/2) dxi and standard DFT dual frequencies.
 *  Midpoint placement keeps the kink of e^{-|xi|} and the wrap seam between
 *  samples, which is worth an order of magnitude in slice accuracy. */
struct AncillaGrid {
    double L = 4.0;
    double R = 4.0;
    int N = 64;

    double width() const { return L + R; }
    double dxi() const { return width() / N; }
    double xi(int j) const { return -L + (j + 0.5) * dxi(); }
    double eta(int m) const {
        int s = m <= N / 2 - 1 ? m : m - N;
        return 2.0 * M_PI * s / width();
    }
    std::vector<double> profile() const {
        std::vector<double> p(N);
        for (int j = 0; j < N; ++j) p[j] = std::exp(-std::abs(xi(j)));
        return p;
    }

    void validate(double lambda_max, double T) const {
        if (N < 4 || N % 2 != 0) throw std::invalid_argument("AncillaGrid: N must be even and >= 4");
        if (R <= std::max(0.0, lambda_max * T) + 3.0)
            throw std::invalid_argument(
                "AncillaGrid: R must exceed max(0, lambda_max T) by at least 3 profile widths; "
                "required R > " + std::to_string(std::max(0.0, lambda_max * T) + 3.0));
    }

    static AncillaGrid defaults(const SplitOperator& op, double T, int N = 64) {
        const double w = std::max(4.0, 2.0 * std::abs(op.lambda_max_A2) * T + 4.0);
        return AncillaGrid{w, w, N};
    }
};

/** Extended statevector over (eta ancilla) x (spatial grid), kept in the eta
 *  representation where the evolution is block diagonal. */
struct SchrodState {
    AncillaGrid ancilla;
    Grid grid;
    double time = 0.0;
    double lambda_max_A2 = 0.0;
    double u0_norm = 0.0;
    MatC blocks;  // N_xi rows (eta index, DFT layout) by n_x^d columns
};

/** Evolve u0 (x) ancilla under H = A2 (x) eta + A1 (x) 1: for each dual
 *  frequency eta_m the x-block evolves by exp(-i (A2 eta_m + A1) T), computed
 *  through the Hermitian eigendecomposition. */
inline SchrodState schrod_evolve(const Field& u0, const SplitOperator& op, const AncillaGrid& anc,
                                 double T) {
    anc.validate(op.lambda_max_A2, T);
    if (!(u0.grid == op.grid)) throw std::invalid_argument("schrod_evolve: grid mismatch");
    const std::size_t nx = u0.size();
    const int N = anc.N;

    // ancilla profile -> eta representation (1D DFT)
    const std::vector<double> profd = anc.profile();
    std::vector<cplx> prof(profd.begin(), profd.end());
    Grid line{1, N};
    fft_inplace(line, prof, FFTW_FORWARD);

    VecC u0v(nx);
    for (std::size_t i = 0; i < nx; ++i) u0v[static_cast<long>(i)] = u0[i];

    SchrodState st;
    st.ancilla = anc;
    st.grid = u0.grid;
    st.time = T;
    st.lambda_max_A2 = op.lambda_max_A2;
    st.u0_norm = norm_l2(u0);
    st.blocks = MatC(N, nx);
    for (int m = 0; m < N; ++m) {
        MatC H = anc.eta(m) * op.A2 + op.A1;
        Eigen::SelfAdjointEigenSolver<MatC> es(H);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("schrod_evolve: eigendecomposition failed on an eta block");
        VecC phases(es.eigenvalues().size());
        for (long k = 0; k < phases.size(); ++k)
            phases[k] = std::polar(1.0, -es.eigenvalues()[k] * T);
        VecC evolved = es.eigenvectors() *
                       (phases.asDiagonal() * (es.eigenvectors().adjoint() * u0v));
        st.blocks.row(m) = (prof[static_cast<std::size_t>(m)] * evolved).transpose();
    }
    return st;
}

inline double state_norm(const SchrodState& st) {
    // Parseval: the eta-representation carries N times the xi-space sum
    return st.blocks.norm() / std::sqrt(static_cast<double>(st.ancilla.N));
}

/** Statevector in the xi representation: inverse DFT over the ancilla index. */
inline MatC to_xi_representation(const SchrodState& st) {
    const int N = st.ancilla.N;
    MatC out(N, st.blocks.cols());
    Grid line{1, N};
    std::vector<cplx> col(static_cast<std::size_t>(N));
    for (long j = 0; j < st.blocks.cols(); ++j) {
        for (int m = 0; m < N; ++m) col[static_cast<std::size_t>(m)] = st.blocks(m, j);
        fft_inplace(line, col, FFTW_BACKWARD);
        for (int m = 0; m < N; ++m) out(m, j) = col[static_cast<std::size_t>(m)] / double(N);
    }
    return out;
}

struct RecoveryResult {
    ComplexField u;
    double norm_estimate = 0.0;
    double p_succ = 0.0;
    double tail_mass = 0.0;  // deterministic reference tail of the ancilla profile
    double xi_star = 0.0;
    int xi_star_index = 0;
};

/** Recover u(T) from the slice at xi* = smallest grid point above
 *  max(0, lambda_max(A2) T) + dxi, and the norm from the exact post-selection
 *  probability p_succ = sum_{xi > xi*} ||w(xi,.)||^2 / ||w||^2 calibrated
 *  against the zero-dynamics tail of the profile. */
inline RecoveryResult recover(const SchrodState& st) {
    const AncillaGrid& anc = st.ancilla;
    const int N = anc.N;
    const double thresh = std::max(0.0, st.lambda_max_A2 * st.time) + anc.dxi();
    int idx = -1;
    for (int j = 0; j < N; ++j) {
        if (anc.xi(j) > thresh) {
            idx = j;
            break;
        }
    }
    if (idx < 0)
        throw std::runtime_error("recover: xi* outside the ancilla window; need R_xi > " +
                                 std::to_string(thresh + 3.0));

    MatC w = to_xi_representation(st);
    RecoveryResult out;
    out.xi_star_index = idx;
    out.xi_star = anc.xi(idx);
    out.u = ComplexField(st.grid);
    const double scale = std::exp(out.xi_star);
    for (long j = 0; j < w.cols(); ++j) out.u[static_cast<std::size_t>(j)] = scale * w(idx, j);

    double tail = 0.0, total = 0.0;
    for (int m = 0; m < N; ++m) {
        const double rw = w.row(m).squaredNorm();
        total += rw;
        if (anc.xi(m) > out.xi_star) tail += rw;
    }
    out.p_succ = tail / total;

    // zero-dynamics reference: with A = 0 the state is u0 (x) profile, so the
    // post-selection tail is the profile tail ratio at the same xi*
    auto prof = anc.profile();
    double ptail = 0.0, ptot = 0.0;
    for (int m = 0; m < N; ++m) {
        ptot += prof[static_cast<std::size_t>(m)] * prof[static_cast<std::size_t>(m)];
        if (anc.xi(m) > out.xi_star) ptail += prof[static_cast<std::size_t>(m)] * prof[static_cast<std::size_t>(m)];
    }
    out.tail_mass = ptail / ptot;
    out.norm_estimate = st.u0_norm * std::sqrt(out.p_succ / out.tail_mass);
    return out;
}

/** Post-selection probability for an arbitrary cut xi > xi(cut_index). */
inline double p_succ_at(const SchrodState& st, int cut_index) {
    MatC w = to_xi_representation(st);
    double tail = 0.0, total = 0.0;
    for (int m = 0; m < st.ancilla.N; ++m) {
        const double rw = w.row(m).squaredNorm();
        total += rw;
        if (m > cut_index) tail += rw;
    }
    return tail / total;
}

/** e^{xi_j} w(xi_j, .) at a slice above xi*; used for slice-independence checks. */
inline ComplexField slice_at(const SchrodState& st, int index) {
    if (index < 0 || index >= st.ancilla.N) throw std::invalid_argument("slice_at: index out of range");
    MatC w = to_xi_representation(st);
    ComplexField out(st.grid);
    const double scale = std::exp(st.ancilla.xi(index));
    for (long j = 0; j < w.cols(); ++j) out[static_cast<std::size_t>(j)] = scale * w(index, j);
    return out;
}

/** Dump per-eta block norms and the recovered field as CSV plus a manifest. */
inline void write_schrod_dump(const SchrodState& st, const RecoveryResult& rec,
                              const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream os(fs::path(dir) / "block_norms.csv");
        os << "m,eta,block_norm\n";
        for (int m = 0; m < st.ancilla.N; ++m)
            os << m << "," << fmt_double(st.ancilla.eta(m)) << ","
               << fmt_double(st.blocks.row(m).norm()) << "\n";
    }
    save_csv(rec.u, (fs::path(dir) / "recovered_u.csv").string());
    std::ofstream manifest(fs::path(dir) / "schrod_manifest.csv");
    manifest << "key,value\n";
    manifest << "time," << fmt_double(st.time) << "\n";
    manifest << "xi_star," << fmt_double(rec.xi_star) << "\n";
    manifest << "p_succ," << fmt_double(rec.p_succ) << "\n";
    manifest << "tail_mass," << fmt_double(rec.tail_mass) << "\n";
    manifest << "norm_estimate," << fmt_double(rec.norm_estimate) << "\n";
    manifest << "state_norm," << fmt_double(state_norm(st)) << "\n";
}

// ---- query-complexity calculators (all constants 1) ----

enum class AncillaMode { first_order, optimal };

/** Query-count model (1/||u||)(alpha t mu + ln(mu / (eps ||u||))) with
 *  alpha = max(||A1||, ||A2||) and mu = 1/eps (first order) or ln(1/eps). */
inline double query_complexity(double norm_A1, double norm_A2, double t, double eps,
                               double norm_u_t, AncillaMode mode) {
    if (eps <= 0.0 || norm_u_t <= 0.0 || t < 0.0)
        throw std::invalid_argument("query_complexity: inputs must be positive");
    const double alpha = std::max(norm_A1, norm_A2);
    const double mu = mode == AncillaMode::first_order ? 1.0 / eps : std::log(1.0 / eps);
    return (alpha * t * mu + std::log(mu / (eps * norm_u_t))) / norm_u_t;
}

struct OperatorNorms {
    double A1;
    double A2;
};

/** ||A1|| = d N_x, ||A2|| = d N_x^2 for the centered stencils. */
inline OperatorNorms operator_norms_from_grid(int d, int n_x) {
    return {static_cast<double>(d) * n_x, static_cast<double>(d) * n_x * n_x};
}

/** Norm bounds under the value-precision grid choice dx = (eps/d)^{1/2}. */
inline OperatorNorms operator_norms_value(int d, double eps) {
    return {std::pow(d, 1.5) / std::sqrt(eps), static_cast<double>(d) * d / eps};
}

/** Norm bounds under the gradient-precision grid choice dx = eps/d^{3/2}. */
inline OperatorNorms operator_norms_gradient(int d, double eps) {
    return {std::pow(d, 2.5) / eps, std::pow(d, 4.0) / (eps * eps)};
}

/** First-order scheme cost for the heat pipeline: d (nu d/eps + Vmax/nu) t / sqrt(eps) / ||u||. */
inline double cost_heat_first_order(int d, double nu, double eps, double vmax, double t,
                                    double norm_u_t) {
    return d * (nu * d / eps + vmax / nu) * t / std::sqrt(eps) / norm_u_t;
}

/** Clock-mode cost for the general pipeline: d^3 t (|mu_max| + nu_max d/eps) / sqrt(eps) / ||u||. */
inline double cost_general_clock(int d, double mu_max, double nu_max, double eps, double t,
                                 double norm_u_t) {
    return std::pow(d, 3.0) * t * (std::abs(mu_max) + nu_max * d / eps) / std::sqrt(eps) / norm_u_t;
}

}  // namespace vhj
