#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "grid.hpp"

namespace vhj {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/** Convex kinetic term K(v) with optional analytic minimiser, Hessian and conjugate. */
struct KineticSpec {
    enum class Kind { quadratic, half_quadratic, anisotropic, quartic, tabulated };

    Kind kind = Kind::quadratic;
    int dim = 1;
    std::function<double(const Vec&)> eval;
    std::optional<Vec> minimiser;                        // v*
    std::optional<Mat> hessian_at_min;                   // D = grad^2 K(v*)
    std::optional<std::function<double(const Vec&)>> conjugate;  // analytic K*(p)

    double operator()(const Vec& v) const { return eval(v); }

    /** K(v) = |v - shift|^2. */
    static KineticSpec quadratic(int d, double shift = 0.0) {
        KineticSpec k;
        k.kind = Kind::quadratic;
        k.dim = d;
        Vec v0 = Vec::Constant(d, shift);
        k.eval = [v0](const Vec& v) { return (v - v0).squaredNorm(); };
        k.minimiser = v0;
        k.hessian_at_min = 2.0 * Mat::Identity(d, d);
        k.conjugate = [v0](const Vec& p) { return 0.25 * p.squaredNorm() + p.dot(v0); };
        return k;
    }

    /** K(v) = |v|^2 / 2. */
    static KineticSpec half_quadratic(int d) {
        KineticSpec k;
        k.kind = Kind::half_quadratic;
        k.dim = d;
        k.eval = [](const Vec& v) { return 0.5 * v.squaredNorm(); };
        k.minimiser = Vec::Zero(d);
        k.hessian_at_min = Mat::Identity(d, d);
        k.conjugate = [](const Vec& p) { return 0.5 * p.squaredNorm(); };
        return k;
    }

    /** K(v) = v^T M v with M positive definite. */
    static KineticSpec anisotropic(const Mat& M) {
        Eigen::SelfAdjointEigenSolver<Mat> es(M);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw std::invalid_argument("KineticSpec::anisotropic: M must be positive definite");
        KineticSpec k;
        k.kind = Kind::anisotropic;
        k.dim = static_cast<int>(M.rows());
        k.eval = [M](const Vec& v) { return v.dot(M * v); };
        k.minimiser = Vec::Zero(k.dim);
        k.hessian_at_min = 2.0 * M;
        Mat Minv = M.inverse();
        k.conjugate = [Minv](const Vec& p) { return 0.25 * p.dot(Minv * p); };
        return k;
    }

    /** K(v) = |v|^4; Hessian at the minimiser is singular, so the general-K
     *  continuum pipeline rejects it, but conjugation and the entropy scheme work. */
    static KineticSpec quartic(int d) {
        KineticSpec k;
        k.kind = Kind::quartic;
        k.dim = d;
        k.eval = [](const Vec& v) { double s = v.squaredNorm(); return s * s; };
        k.minimiser = Vec::Zero(d);
        k.hessian_at_min = Mat::Zero(d, d);
        return k;
    }

    /** User-supplied convex evaluator; minimiser/Hessian found by brute force when needed. */
    static KineticSpec tabulated(int d, std::function<double(const Vec&)> f) {
        KineticSpec k;
        k.kind = Kind::tabulated;
        k.dim = d;
        k.eval = std::move(f);
        return k;
    }
};

/** Bounded potential V(x) on the torus; optionally time dependent (quadratic pipeline only). */
struct PotentialSpec {
    std::function<double(const std::array<double, 3>&)> eval;
    double vmax = 0.0;             // max |V|, informational
    double semiconvexity = 0.0;    // informational
    bool time_dependent = false;
    std::function<double(double, const std::array<double, 3>&)> eval_t;

    double operator()(const std::array<double, 3>& x) const { return eval(x); }
    double at(double t, const std::array<double, 3>& x) const {
        return time_dependent ? eval_t(t, x) : eval(x);
    }
    bool is_zero() const { return vmax == 0.0 && !time_dependent; }

    static PotentialSpec zero() {
        PotentialSpec p;
        p.eval = [](const std::array<double, 3>&) { return 0.0; };
        p.vmax = 0.0;
        return p;
    }

    static PotentialSpec constant(double c) {
        PotentialSpec p;
        p.eval = [c](const std::array<double, 3>&) { return c; };
        p.vmax = std::abs(c);
        return p;
    }

    static PotentialSpec cosine(double amplitude, int mode = 1) {
        PotentialSpec p;
        p.eval = [amplitude, mode](const std::array<double, 3>& x) {
            return amplitude * std::cos(2.0 * M_PI * mode * x[0]);
        };
        p.vmax = std::abs(amplitude);
        p.semiconvexity = std::abs(amplitude) * 4.0 * M_PI * M_PI * mode * mode;
        return p;
    }
};

/** Full problem definition: kinetic term, potential, initial data, viscosity. */
struct ProblemSpec {
    KineticSpec kinetic;
    PotentialSpec potential;
    std::function<double(const std::array<double, 3>&)> initial;
    double nu = 0.1;

    ProblemSpec() = default;
    ProblemSpec(KineticSpec k, PotentialSpec v,
                std::function<double(const std::array<double, 3>&)> s0, double nu_)
        : kinetic(std::move(k)), potential(std::move(v)), initial(std::move(s0)), nu(nu_) {
        if (nu <= 0.0) throw std::invalid_argument("ProblemSpec: nu must be positive");
    }

    Field sample_initial(const Grid& g) const { return sample(g, initial); }
};

/** Time-marching parameters for the entropy scheme. */
struct SchemeParams {
    double h = 0.01;
    double T = 0.1;
    int n_steps = 10;
    double velocity_radius = 0.0;  // set by make() so the kernel tail is < 1e-16
    int quad_points = 4001;        // dense v-quadrature resolution for kernel checks

    static SchemeParams make(double h, double T, double nu, int quad_points = 4001) {
        if (h <= 0.0) throw std::invalid_argument("SchemeParams: h must be positive");
        int n = static_cast<int>(std::llround(T / h));
        if (n < 1 || std::abs(n * h - T) > 1e-12 * std::max(1.0, std::abs(T)))
            throw std::invalid_argument("SchemeParams: T must be an integer multiple of h");
        SchemeParams p;
        p.h = h;
        p.T = T;
        p.n_steps = n;
        // e^{-h R^2 / (2 nu)} < 1e-16  <=>  R > sqrt(2 nu * 16 ln 10 / h)
        p.velocity_radius = std::sqrt(2.0 * nu * 16.0 * std::log(10.0) / h) * 1.05;
        p.quad_points = quad_points;
        return p;
    }
};

namespace detail {

/** Golden-section maximisation of f on [a, b] to absolute argument tolerance. */
inline double golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

struct LegendreOptions {
    double radius = 8.0;    // truncation radius of the v-grid
    int grid_points = 0;    // 0 -> dimension-dependent default
    double polish_tol = 1e-8;
};

/** Legendre-Fenchel conjugate K*(p) = sup_v (p.v - K(v)) over a truncated grid,
 *  refined by coordinate-wise golden-section polish around the grid argmax.
 *  Throws if the supremum is attained on the truncation boundary. */
inline double legendre_transform(const KineticSpec& K, const Vec& p,
                                 const LegendreOptions& opt = {}) {
    const int d = K.dim;
    if (p.size() != d) throw std::invalid_argument("legendre_transform: dimension mismatch");
    int npts = opt.grid_points;
    if (npts == 0) npts = d == 1 ? 2001 : (d == 2 ? 201 : 61);

    auto objective = [&](const Vec& v) { return p.dot(v) - K.eval(v); };

    Vec best = Vec::Zero(d);
    double bestval = -std::numeric_limits<double>::infinity();
    std::array<int, 3> idx{0, 0, 0};
    const double step = 2.0 * opt.radius / (npts - 1);
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(npts);
    Vec v(d);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int k = d - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(rem % npts);
            rem /= npts;
        }
        for (int k = 0; k < d; ++k) v[k] = -opt.radius + idx[k] * step;
        double val = objective(v);
        if (val > bestval) {
            bestval = val;
            best = v;
        }
    }
    for (int k = 0; k < d; ++k) {
        if (std::abs(best[k]) >= opt.radius - step * 0.5)
            throw std::runtime_error(
                "legendre_transform: supremum attained at the truncation boundary; "
                "increase LegendreOptions::radius");
    }
    // coordinate-wise polish, cycled a few times for d > 1
    for (int cycle = 0; cycle < (d == 1 ? 1 : 3); ++cycle) {
        for (int k = 0; k < d; ++k) {
            Vec vv = best;
            double lo = best[k] - step, hi = best[k] + step;
            best[k] = detail::golden_max(
                [&](double t) {
                    vv[k] = t;
                    return objective(vv);
                },
                lo, hi, opt.polish_tol);
        }
    }
    return objective(best);
}

/** Hamiltonian H(x, p) = sup_v (-p.v - K(v) + V(x)) = K*(-p) + V(x). */
inline double hamiltonian_of(const KineticSpec& K, const PotentialSpec& V,
                             const std::array<double, 3>& x, const Vec& p,
                             const LegendreOptions& opt = {}) {
    return legendre_transform(K, Vec(-p), opt) + V(x);
}

/** Fast Hamiltonian evaluator for inner loops: analytic conjugate when available. */
inline std::function<double(const std::array<double, 3>&, const Vec&)>
hamiltonian_evaluator(const ProblemSpec& prob, const LegendreOptions& opt = {}) {
    if (prob.kinetic.conjugate) {
        auto conj = *prob.kinetic.conjugate;
        auto V = prob.potential;
        return [conj, V](const std::array<double, 3>& x, const Vec& p) {
            return conj(-p) + V(x);
        };
    }
    KineticSpec K = prob.kinetic;
    PotentialSpec V = prob.potential;
    return [K, V, opt](const std::array<double, 3>& x, const Vec& p) {
        return hamiltonian_of(K, V, x, p, opt);
    };
}

/** Drift/diffusion coefficients of the continuum limit of the entropy scheme.
 *  `printed` carries the closed-form expansion nu_jk = v*_j v*_k + 2 nu (D^-1)_jk;
 *  `empirical` carries the coefficients fitted from one entropy step on probe
 *  modes, which is the unambiguous one-step ground truth (it comes out a
 *  factor 2 smaller in the diffusion for every quadratic-family K). */
struct ContinuumCoefficients {
    Vec drift_printed;
    Mat diffusion_printed;
    Vec drift_empirical;
    Mat diffusion_empirical;
};

struct CalibrationOptions {
    int grid_points = 256;   // per-axis calibration grid
    double h = 0.0;          // 0 -> auto-chosen so the kernel is well resolved
};

namespace detail {

// One normalised entropy step applied to the probe mode exp(2 pi i (x_j [+ x_k])):
// returns the complex multiplier of that mode under the step.
inline cplx one_step_multiplier(const KineticSpec& K, double nu, double h, int axis_j,
                                int axis_k, int npts) {
    const int d = K.dim;
    Grid g = make_grid(d, npts);
    std::vector<double> w(g.size());
    double sum = 0.0;
    Vec v(d);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto mi = g.unflat(i);
        double acc = 0.0;
        // periodise over nearest images
        std::array<int, 3> img{0, 0, 0};
        const int imgrange = 1;
        std::function<void(int)> rec = [&](int k) {
            if (k == d) {
                for (int kk = 0; kk < d; ++kk) v[kk] = (g.offset(mi[kk]) + img[kk]) / h;
                acc += std::exp(-h * K.eval(v) / (2.0 * nu));
                return;
            }
            for (img[k] = -imgrange; img[k] <= imgrange; ++img[k]) rec(k + 1);
        };
        rec(0);
        w[i] = acc;
        sum += acc;
    }
    cplx lam = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto mi = g.unflat(i);
        double phase = g.offset(mi[axis_j]);
        if (axis_k != axis_j) phase += g.offset(mi[axis_k]);
        lam += (w[i] / sum) * std::polar(1.0, 2.0 * M_PI * phase);
    }
    return lam;
}

}  // namespace detail

inline ContinuumCoefficients continuum_coefficients(const KineticSpec& K, double nu,
                                                    const CalibrationOptions& cal = {}) {
    const int d = K.dim;
    Vec vstar;
    Mat D;
    if (K.minimiser && K.hessian_at_min) {
        vstar = *K.minimiser;
        D = *K.hessian_at_min;
    } else {
        // brute minimisation: coordinate-descent golden search from the origin
        Vec v = Vec::Zero(d);
        for (int cycle = 0; cycle < 6; ++cycle) {
            for (int k = 0; k < d; ++k) {
                Vec vv = v;
                v[k] = detail::golden_max(
                    [&](double t) {
                        vv[k] = t;
                        return -K.eval(vv);
                    },
                    v[k] - 4.0, v[k] + 4.0, 1e-10);
            }
        }
        vstar = v;
        // numeric Hessian by central differences
        const double eps = 1e-4;
        D = Mat(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                Vec vpp = vstar, vpm = vstar, vmp = vstar, vmm = vstar;
                vpp[i] += eps; vpp[j] += eps;
                vpm[i] += eps; vpm[j] -= eps;
                vmp[i] -= eps; vmp[j] += eps;
                vmm[i] -= eps; vmm[j] -= eps;
                D(i, j) = (K.eval(vpp) - K.eval(vpm) - K.eval(vmp) + K.eval(vmm)) / (4.0 * eps * eps);
            }
        }
    }
    Eigen::FullPivLU<Mat> lu(D);
    if (!lu.isInvertible())
        throw std::runtime_error("continuum_coefficients: Hessian of K at the minimiser is singular");

    ContinuumCoefficients out;
    out.drift_printed = vstar;
    out.diffusion_printed = vstar * vstar.transpose() + 2.0 * nu * lu.inverse();

    // empirical calibration from one entropy step on probe modes
    int npts = cal.grid_points;
    if (d == 3) npts = std::min(npts, 32);
    else if (d == 2) npts = std::min(npts, 128);
    double h = cal.h;
    if (h <= 0.0) {
        // resolvable kernel: sqrt(h nu) >= 4 dx, and small enough that one step is
        // in the linear-response regime
        double dx = 1.0 / npts;
        h = std::max(1e-3, 32.0 * dx * dx / nu);
    }
    out.drift_empirical = Vec::Zero(d);
    out.diffusion_empirical = Mat::Zero(d, d);
    Vec cdiag(d);
    for (int j = 0; j < d; ++j) {
        cplx lam = detail::one_step_multiplier(K, nu, h, j, j, npts);
        double rho = std::abs(lam);
        double phase = std::arg(lam);
        cdiag[j] = -std::log(rho) / (4.0 * M_PI * M_PI * h);
        out.drift_empirical[j] = phase / (2.0 * M_PI * h);
        out.diffusion_empirical(j, j) = cdiag[j];
    }
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            cplx lam = detail::one_step_multiplier(K, nu, h, j, k, npts);
            double cjk = (-std::log(std::abs(lam)) / (4.0 * M_PI * M_PI * h) - cdiag[j] - cdiag[k]) / 2.0;
            out.diffusion_empirical(j, k) = cjk;
            out.diffusion_empirical(k, j) = cjk;
        }
    }
    return out;
}

/** Parameter selection for target precision eps (constants set to 1). */
struct SelectedParameters {
    double nu;
    double h;
    double dx;
};

enum class PrecisionTarget { value, gradient };

inline SelectedParameters select_parameters(double eps, int d, PrecisionTarget target) {
    if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("select_parameters: eps must lie in (0,1)");
    if (d < 1) throw std::invalid_argument("select_parameters: d must be >= 1");
    SelectedParameters out{};
    const double dd = static_cast<double>(d);
    out.nu = std::pow(eps / dd, 2.0);
    if (target == PrecisionTarget::value) {
        out.h = std::pow(eps, 8.0 / 3.0) / std::pow(dd, 10.0 / 3.0);
        out.dx = std::sqrt(eps / dd);
    } else {
        out.h = std::pow(eps, 4.0) / std::pow(dd, 5.0);
        out.dx = eps / std::pow(dd, 1.5);
    }
    return out;
}

}  // namespace vhj
