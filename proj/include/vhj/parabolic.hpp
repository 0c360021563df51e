#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "colehopf.hpp"
#include "entropy.hpp"
#include "grid.hpp"
#include "problems.hpp"

namespace vhj {

/** Coefficients of the linear parabolic PDE
 *      u_t = a(x) u + sum_j b_j d_j u + sum_jk c_jk d_j d_k u.  */
struct LinearPdeCoefficients {
    std::function<double(const std::array<double, 3>&)> a;  // nullable -> zero
    bool a_time_dependent = false;
    std::function<double(double, const std::array<double, 3>&)> a_t;
    Vec b;
    Mat c;

    bool has_a() const { return static_cast<bool>(a) || a_time_dependent; }

    double a_at(double t, const std::array<double, 3>& x) const {
        if (a_time_dependent) return a_t(t, x);
        return a ? a(x) : 0.0;
    }

    /** True when a is spatially (and temporally) constant; value returned through out. */
    bool a_constant(double& out) const {
        if (a_time_dependent) return false;
        if (!a) {
            out = 0.0;
            return true;
        }
        double v0 = a({0.0, 0.0, 0.0});
        for (double t : {-0.37, 0.11, 0.49}) {
            if (std::abs(a({t, -t / 2, t / 3}) - v0) > 1e-14 * (1.0 + std::abs(v0))) return false;
        }
        out = v0;
        return true;
    }

    void validate() const {
        if (c.rows() != c.cols()) throw std::invalid_argument("coefficients: c must be square");
        if (b.size() != c.rows()) throw std::invalid_argument("coefficients: b/c dimension mismatch");
        Mat sym = 0.5 * (c + c.transpose());
        if ((c - sym).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("coefficients: c must be symmetric");
        Eigen::SelfAdjointEigenSolver<Mat> es(sym);
        if (es.eigenvalues().minCoeff() < -1e-12)
            throw std::invalid_argument("coefficients: c must be positive semidefinite");
    }
};

/** Quadratic pipeline mapping: a = V/(2 nu), b = 0, c = nu I. */
inline LinearPdeCoefficients coefficients_quadratic(const ProblemSpec& problem, int dim) {
    LinearPdeCoefficients co;
    const double nu = problem.nu;
    if (problem.potential.time_dependent) {
        co.a_time_dependent = true;
        auto V = problem.potential;
        co.a_t = [V, nu](double t, const std::array<double, 3>& x) { return V.at(t, x) / (2.0 * nu); };
    } else if (!problem.potential.is_zero()) {
        auto V = problem.potential;
        co.a = [V, nu](const std::array<double, 3>& x) { return V(x) / (2.0 * nu); };
    }
    co.b = Vec::Zero(dim);
    co.c = nu * Mat::Identity(dim, dim);
    co.validate();
    return co;
}

enum class DiffusionConvention { printed, empirical };

/** General-K pipeline mapping: a = 0, (b, c) from the continuum coefficients of
 *  the entropy step.  The empirical calibration is the default downstream. */
inline LinearPdeCoefficients coefficients_general(
    const ProblemSpec& problem, DiffusionConvention conv = DiffusionConvention::empirical,
    const CalibrationOptions& cal = {}) {
    ContinuumCoefficients cc = continuum_coefficients(problem.kinetic, problem.nu, cal);
    LinearPdeCoefficients co;
    if (conv == DiffusionConvention::printed) {
        co.b = cc.drift_printed;
        co.c = cc.diffusion_printed;
    } else {
        co.b = cc.drift_empirical;
        co.c = cc.diffusion_empirical;
    }
    co.validate();
    return co;
}

struct IntegratorConfig {
    enum class Method { explicit_rk4, explicit_euler, spectral_exact };
    Method method = Method::explicit_rk4;
    double dt = 0.0;           // 0 -> auto from the CFL bound
    double cfl_safety = 0.4;
};

namespace detail {

template <class T>
FieldT<T> pde_rhs(const FieldT<T>& u, const LinearPdeCoefficients& co, double t,
                  const std::vector<double>* a_samples) {
    const Grid& g = u.grid;
    FieldT<T> out(g, T{});
    // source
    if (a_samples) {
        for (std::size_t i = 0; i < u.size(); ++i) out[i] += (*a_samples)[i] * u[i];
    } else if (co.has_a()) {
        for (std::size_t i = 0; i < u.size(); ++i) out[i] += co.a_at(t, g.point(i)) * u[i];
    }
    // drift: central differences
    for (int j = 0; j < g.dim; ++j) {
        if (co.b[j] == 0.0) continue;
        FieldT<T> dj = apply_derivative(u, j);
        for (std::size_t i = 0; i < u.size(); ++i) out[i] += co.b[j] * dj[i];
    }
    // diffusion: 3-point second differences on the diagonal, centered mixed stencils off it
    for (int j = 0; j < g.dim; ++j) {
        if (co.c(j, j) != 0.0) {
            FieldT<T> d2 = second_difference(u, j);
            for (std::size_t i = 0; i < u.size(); ++i) out[i] += co.c(j, j) * d2[i];
        }
        for (int k = j + 1; k < g.dim; ++k) {
            if (co.c(j, k) == 0.0) continue;
            FieldT<T> djk = apply_derivative(apply_derivative(u, j), k);
            for (std::size_t i = 0; i < u.size(); ++i) out[i] += 2.0 * co.c(j, k) * djk[i];
        }
    }
    return out;
}

}  // namespace detail

/** Integrate the PDE to time T.  spectral_exact applies the exact per-mode
 *  multiplier e^{T (a + 2 pi i b.k - 4 pi^2 k^T c k)} and requires constant
 *  coefficients; the explicit methods use centered stencils under the
 *  diffusive stability bound dt <= safety dx^2 / (2 d max c). */
template <class T>
FieldT<T> evolve(const FieldT<T>& u0, const LinearPdeCoefficients& co, double T_final,
                 const IntegratorConfig& cfg = {}) {
    co.validate();
    const Grid& g = u0.grid;
    if (static_cast<int>(co.b.size()) != g.dim)
        throw std::invalid_argument("evolve: coefficient dimension does not match grid");
    if (T_final < 0.0) throw std::invalid_argument("evolve: negative time");
    if (T_final == 0.0) return u0;

    if (cfg.method == IntegratorConfig::Method::spectral_exact) {
        double aconst = 0.0;
        if (!co.a_constant(aconst))
            throw std::invalid_argument("evolve: spectral_exact requires constant coefficients");
        Vec b = co.b;
        Mat c = co.c;
        auto mult = [&](const std::array<int, 3>& m) {
            Vec k(g.dim);
            for (int j = 0; j < g.dim; ++j) k[j] = m[j];
            const double re = aconst - 4.0 * M_PI * M_PI * k.dot(c * k);
            const double im = 2.0 * M_PI * b.dot(k);
            return std::exp(cplx(re, im) * T_final);
        };
        return fft_multiplier(u0, mult);
    }

    const double dx = g.spacing();
    const double cmax = co.c.cwiseAbs().maxCoeff();
    double dt = cfg.dt;
    double dt_bound = std::numeric_limits<double>::infinity();
    if (cmax > 0.0) dt_bound = cfg.cfl_safety * dx * dx / (2.0 * g.dim * cmax);
    const double bsum = co.b.cwiseAbs().sum();
    if (bsum > 0.0) dt_bound = std::min(dt_bound, cfg.cfl_safety * dx / bsum);
    if (dt <= 0.0) {
        dt = std::min(dt_bound, T_final);
    } else if (dt > dt_bound) {
        throw std::invalid_argument("evolve: requested dt violates the stability bound");
    }
    int nsteps = static_cast<int>(std::ceil(T_final / dt - 1e-12));
    dt = T_final / nsteps;

    // cache a(x) samples when time independent
    std::optional<std::vector<double>> a_samples;
    if (co.has_a() && !co.a_time_dependent) {
        a_samples.emplace(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) (*a_samples)[i] = co.a(g.point(i));
    }
    const std::vector<double>* ap = a_samples ? &*a_samples : nullptr;

    FieldT<T> u = u0;
    for (int n = 0; n < nsteps; ++n) {
        const double t = n * dt;
        if (cfg.method == IntegratorConfig::Method::explicit_euler) {
            FieldT<T> k1 = detail::pde_rhs(u, co, t, ap);
            for (std::size_t i = 0; i < u.size(); ++i) u[i] += dt * k1[i];
        } else {
            FieldT<T> k1 = detail::pde_rhs(u, co, t, ap);
            FieldT<T> tmp(g);
            for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
            FieldT<T> k2 = detail::pde_rhs(tmp, co, t + 0.5 * dt, ap);
            for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
            FieldT<T> k3 = detail::pde_rhs(tmp, co, t + 0.5 * dt, ap);
            for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + dt * k3[i];
            FieldT<T> k4 = detail::pde_rhs(tmp, co, t + dt, ap);
            for (std::size_t i = 0; i < u.size(); ++i)
                u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!std::isfinite(std::abs(cplx(u[i]))))
                throw std::runtime_error("evolve: non-finite value at step " + std::to_string(n + 1));
        }
    }
    return u;
}

enum class Pipeline { quadratic, general_printed, general_empirical };

/** S(T, .) via forward transform, linear evolution, inverse transform.
 *  In the general pipeline a nonzero V enters as the source a = V/(2 nu), the
 *  continuum limit of the potential factor carried by the unnormalised step. */
inline Field solve_S(const ProblemSpec& problem, const Grid& grid, double T_final,
                     const IntegratorConfig& cfg = {}, Pipeline pipeline = Pipeline::quadratic,
                     const CalibrationOptions& cal = {}) {
    LinearPdeCoefficients co;
    if (pipeline == Pipeline::quadratic) {
        co = coefficients_quadratic(problem, grid.dim);
    } else {
        co = coefficients_general(problem,
                                  pipeline == Pipeline::general_printed
                                      ? DiffusionConvention::printed
                                      : DiffusionConvention::empirical,
                                  cal);
        if (!problem.potential.is_zero()) {
            const double nu = problem.nu;
            auto V = problem.potential;
            co.a = [V, nu](const std::array<double, 3>& x) { return V(x) / (2.0 * nu); };
        }
    }
    TransformConfig tc(problem.nu);
    Field u0 = colehopf_forward(problem.sample_initial(grid), tc);
    Field uT = evolve(u0, co, T_final, cfg);
    return colehopf_inverse(uT, tc).S;
}

}  // namespace vhj
