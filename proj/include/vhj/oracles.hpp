#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

#include "grid.hpp"
#include "parabolic.hpp"
#include "problems.hpp"

namespace vhj {

/** Brute-force reference solution with an estimate of its own error obtained
 *  from a half-resolution rerun. */
struct OracleResult {
    Field values;
    std::string method;
    std::map<std::string, double> metadata;
    double self_error = 0.0;
};

struct HopfLaxOptions {
    int search_points = 4096;   // y-grid resolution per dimension
    int image_range = 1;        // periodic images in {-range..range}^d
    double polish_tol = 1e-10;
    bool estimate_self_error = true;
};

namespace detail {

inline double hopf_lax_point(const std::function<double(const std::array<double, 3>&)>& S0,
                             const KineticSpec& K, double t, const std::array<double, 3>& x,
                             int d, int ny, int image_range, double polish_tol,
                             bool* boundary_hit) {
    const double dy = 1.0 / ny;
    Vec v(d);
    double best = std::numeric_limits<double>::infinity();
    std::array<double, 3> besty{0.0, 0.0, 0.0};
    std::array<int, 3> idx{0, 0, 0};
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(ny);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int k = d - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(rem % ny);
            rem /= ny;
        }
        std::array<double, 3> y{0.0, 0.0, 0.0};
        for (int k = 0; k < d; ++k) y[k] = -0.5 + idx[k] * dy;
        const double s0 = S0(y);
        // nearest periodic images of y relative to x
        std::array<int, 3> img{0, 0, 0};
        std::function<void(int)> rec = [&](int k) {
            if (k == d) {
                for (int kk = 0; kk < d; ++kk) v[kk] = (x[kk] - (y[kk] + img[kk])) / t;
                const double val = s0 + t * K.eval(v);
                if (val < best) {
                    best = val;
                    for (int kk = 0; kk < d; ++kk) besty[kk] = y[kk] + img[kk];
                }
                return;
            }
            for (img[k] = -image_range; img[k] <= image_range; ++img[k]) rec(k + 1);
        };
        rec(0);
    }
    for (int k = 0; k < d; ++k) {
        if (std::abs(besty[k]) > image_range + 0.5 - 2.0 * dy) *boundary_hit = true;
    }
    // local golden polish around the grid argmin, coordinate-wise
    auto objective = [&](const std::array<double, 3>& y) {
        for (int kk = 0; kk < d; ++kk) v[kk] = (x[kk] - y[kk]) / t;
        return -(S0({y[0], y[1], y[2]}) + t * K.eval(v));
    };
    std::array<double, 3> y = besty;
    for (int cycle = 0; cycle < (d == 1 ? 1 : 3); ++cycle) {
        for (int k = 0; k < d; ++k) {
            auto yy = y;
            y[k] = vhj::detail::golden_max(
                [&](double s) {
                    yy[k] = s;
                    return objective(yy);
                },
                y[k] - dy, y[k] + dy, polish_tol);
        }
    }
    return -objective(y);
}

}  // namespace detail

/** Hopf-Lax viscosity solution on the torus:
 *      S(t,x) = min_y [ S0(y) + t K((x - y)/t) ]
 *  minimised over a fine y-grid and its nearest periodic images, then polished.
 *  Requires V = 0 and an even convex K. */
inline OracleResult hopf_lax(const std::function<double(const std::array<double, 3>&)>& S0,
                             const KineticSpec& K, double t, const Grid& grid_eval,
                             HopfLaxOptions opt = {}) {
    if (t <= 0.0) throw std::invalid_argument("hopf_lax: t must be positive");
    const int d = grid_eval.dim;

    auto run = [&](int ny, int image_range) {
        Field out(grid_eval);
        bool boundary = false;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = detail::hopf_lax_point(S0, K, t, grid_eval.point(i), d, ny, image_range,
                                            opt.polish_tol, &boundary);
        return std::make_pair(out, boundary);
    };

    int image_range = opt.image_range;
    auto [vals, boundary] = run(opt.search_points, image_range);
    while (boundary && image_range < 4) {
        ++image_range;
        std::tie(vals, boundary) = run(opt.search_points, image_range);
    }
    if (boundary) throw std::runtime_error("hopf_lax: minimiser keeps hitting the image-search boundary");

    OracleResult res;
    res.values = vals;
    res.method = "hopf_lax";
    res.metadata["search_points"] = opt.search_points;
    res.metadata["image_range"] = image_range;
    if (opt.estimate_self_error) {
        auto [coarse, b2] = run(opt.search_points / 2, image_range);
        (void)b2;
        res.self_error = max_abs_diff(vals, coarse);
    }
    return res;
}

enum class ViscousCoefficient { quadratic_nu, general_2anu };

/** The dimensional constant a of the discrete-time viscous limit, evaluated
 *  from its Gaussian-moment definition a = int |w|^2 e^{-|w|^2} dw / (2 int e^{-|w|^2} dw)
 *  over R^d by 1D quadrature (it comes out d/4). */
inline double gaussian_moment_a(int d) {
    const int nq = 8001;
    const double R = 8.0, dw = 2.0 * R / (nq - 1);
    double m2 = 0.0, m0 = 0.0;
    for (int q = 0; q < nq; ++q) {
        const double w = -R + q * dw;
        const double e = std::exp(-w * w);
        const double tw = (q == 0 || q == nq - 1) ? 0.5 : 1.0;
        m0 += tw * e;
        m2 += tw * w * w * e;
    }
    // in d dimensions the moment integral factorises: E|w|^2 = d * (m2/m0)
    return d * (m2 / m0) / 2.0;
}

struct ViscousOptions {
    double cfl_safety = 0.4;
    bool estimate_self_error = true;
};

/** Direct explicit solve of S_t = -H(x, grad S) + coeff * Lap S with central
 *  gradients; the Hamiltonian comes from the problems-module evaluator. */
inline OracleResult viscous_hj_direct(const ProblemSpec& problem, const Grid& grid, double T_final,
                                      ViscousCoefficient mode, ViscousOptions opt = {}) {
    const double coeff = mode == ViscousCoefficient::quadratic_nu
                             ? problem.nu
                             : 2.0 * gaussian_moment_a(grid.dim) * problem.nu;
    auto H = hamiltonian_evaluator(problem);

    auto run = [&](const Grid& g) {
        Field S = problem.sample_initial(g);
        const double dx = g.spacing();
        double dt = opt.cfl_safety * dx * dx / (2.0 * g.dim * std::max(coeff, 1e-12));
        int nsteps = static_cast<int>(std::ceil(T_final / dt - 1e-12));
        dt = T_final / nsteps;
        Vec p(g.dim);
        for (int n = 0; n < nsteps; ++n) {
            std::vector<Field> grads;
            grads.reserve(g.dim);
            for (int k = 0; k < g.dim; ++k) grads.push_back(apply_derivative(S, k));
            Field lap = laplacian(S);
            for (std::size_t i = 0; i < S.size(); ++i) {
                for (int k = 0; k < g.dim; ++k) p[k] = grads[k][i];
                S[i] += dt * (-H(g.point(i), p) + coeff * lap[i]);
                if (!std::isfinite(S[i]))
                    throw std::runtime_error("viscous_hj_direct: instability at step " +
                                             std::to_string(n + 1));
            }
        }
        return S;
    };

    OracleResult res;
    res.values = run(grid);
    res.method = "viscous_hj_direct";
    res.metadata["coeff"] = coeff;
    if (opt.estimate_self_error && grid.n >= 8) {
        Grid half = make_grid(grid.dim, grid.n / 2);
        Field coarse = run(half);
        double m = 0.0;
        for (std::size_t i = 0; i < coarse.size(); ++i) {
            auto mi = half.unflat(i);
            std::array<int, 3> fine_mi{0, 0, 0};
            for (int k = 0; k < grid.dim; ++k) fine_mi[k] = 2 * mi[k];
            m = std::max(m, std::abs(coarse[i] - res.values[grid.flat(fine_mi)]));
        }
        res.self_error = m;
    }
    return res;
}

/** Conservative explicit solve of the 1D forced Burgers equation
 *      R_t + (R^2/2)_x + V_x = nu R_xx.  */
inline OracleResult burgers_direct(const Field& R0,
                                   const std::function<double(const std::array<double, 3>&)>& V,
                                   double nu, double T_final, double cfl_safety = 0.4,
                                   bool estimate_self_error = true) {
    if (R0.grid.dim != 1) throw std::invalid_argument("burgers_direct: 1D only");

    auto run = [&](const Field& r0) {
        const Grid& g = r0.grid;
        Field R = r0;
        const double dx = g.spacing();
        Field Vx(g);
        {
            Field Vf = sample(g, V);
            Vx = apply_derivative(Vf, 0);
        }
        const double rmax = std::max(max_abs(R), 1e-12);
        double dt = cfl_safety * std::min(dx / rmax, dx * dx / (2.0 * std::max(nu, 1e-12)));
        int nsteps = static_cast<int>(std::ceil(T_final / dt - 1e-12));
        dt = T_final / nsteps;
        for (int n = 0; n < nsteps; ++n) {
            Field flux(g);
            for (std::size_t i = 0; i < R.size(); ++i) flux[i] = 0.5 * R[i] * R[i];
            Field dflux = apply_derivative(flux, 0);
            Field lap = second_difference(R, 0);
            for (std::size_t i = 0; i < R.size(); ++i) {
                R[i] += dt * (-dflux[i] - Vx[i] + nu * lap[i]);
                if (!std::isfinite(R[i]))
                    throw std::runtime_error("burgers_direct: CFL instability at step " +
                                             std::to_string(n + 1));
            }
        }
        return R;
    };

    OracleResult res;
    res.values = run(R0);
    res.method = "burgers_direct";
    if (estimate_self_error && R0.grid.n >= 8) {
        Grid half = make_grid(1, R0.grid.n / 2);
        Field r0c(half);
        for (int i = 0; i < half.n; ++i) r0c[i] = R0[static_cast<std::size_t>(2 * i)];
        Field coarse = run(r0c);
        double num = 0.0;
        for (int i = 0; i < half.n; ++i) {
            double dlt = coarse[i] - res.values[static_cast<std::size_t>(2 * i)];
            num += dlt * dlt;
        }
        // unweighted l2 on the coarse points, rescaled to the fine count
        res.self_error = std::sqrt(num * 2.0);
    }
    return res;
}

/** Exact constant-coefficient solution by per-mode Fourier multipliers. */
inline OracleResult heat_exact(const Field& u0, double a_const, const Vec& b, const Mat& c,
                               double T_final) {
    const Grid& g = u0.grid;
    auto mult = [&](const std::array<int, 3>& m) {
        Vec k(g.dim);
        for (int j = 0; j < g.dim; ++j) k[j] = m[j];
        const double re = a_const - 4.0 * M_PI * M_PI * k.dot(c * k);
        const double im = 2.0 * M_PI * b.dot(k);
        return std::exp(cplx(re, im) * T_final);
    };
    OracleResult res;
    res.values = fft_multiplier(u0, mult);
    res.method = "heat_exact";
    return res;
}

}  // namespace vhj
