#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <filesystem>
#include <fstream>

#include "colehopf.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "problems.hpp"

namespace vhj {

/** Discrete convolution kernel for one entropy step: unit-sum weights on grid
 *  offsets y_m with w_m ~ e^{-h K(y_m/h)/(2 nu)} (periodised), plus the
 *  velocity-integral prefactor Z = sum of the raw quadrature weights, which is
 *  the discrete counterpart of \int e^{-h K(v)/(2 nu)} dv and is kept separate
 *  so the literal unnormalised operator can be reconstructed. */
struct EntropyKernel {
    Grid grid;
    double h = 0.0;
    double nu = 0.0;
    std::vector<double> weights;   // unit sum
    double prefactor = 1.0;        // Z: discrete velocity integral
    bool normalised = true;
    bool resolvable = true;        // sqrt(h nu) >= dx/4
    double tail = 0.0;             // relative mass outside the periodisation images
};

inline EntropyKernel build_kernel(const ProblemSpec& problem, const SchemeParams& params,
                                  const Grid& grid, bool normalised) {
    const int d = grid.dim;
    const double h = params.h;
    const double nu = problem.nu;
    const double dx = grid.spacing();

    EntropyKernel kern;
    kern.grid = grid;
    kern.h = h;
    kern.nu = nu;
    kern.normalised = normalised;
    kern.resolvable = std::sqrt(h * nu) >= 0.25 * dx;

    const KineticSpec& K = problem.kinetic;
    std::vector<double> raw(grid.size(), 0.0);
    const double volume = std::pow(dx / h, d);  // dv = (dy/h)^d on the offset grid

    // widen the image range until the added mass is negligible
    int imgrange = 1;
    double beyond = 0.0;
    for (; imgrange <= 5; ++imgrange) {
        Vec v(d);
        for (int k = 0; k < d; ++k) v[k] = (0.5 + imgrange) / h;  // nearest corner just outside
        beyond = std::exp(-h * K.eval(v) / (2.0 * nu));
        if (beyond < 1e-18) break;
    }
    if (beyond >= 1e-12)
        throw std::runtime_error("build_kernel: kernel mass escapes the periodisation range (tail too heavy)");

    Vec v(d);
    std::array<int, 3> img{0, 0, 0};
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto mi = grid.unflat(i);
        double acc = 0.0;
        std::function<void(int)> rec = [&](int k) {
            if (k == d) {
                for (int kk = 0; kk < d; ++kk) v[kk] = (grid.offset(mi[kk]) + img[kk]) / h;
                acc += std::exp(-h * K.eval(v) / (2.0 * nu));
                return;
            }
            for (img[k] = -imgrange; img[k] <= imgrange; ++img[k]) rec(k + 1);
        };
        rec(0);
        raw[i] = acc * volume;
        sum += acc * volume;
    }
    kern.tail = beyond;
    kern.prefactor = sum;
    for (auto& w : raw) w /= sum;
    // force the unit sum so constants are exact fixed points of the normalised step
    for (int pass = 0; pass < 3; ++pass) {
        double s = 0.0;
        for (double w : raw) s += w;
        if (s == 1.0) break;
        raw[0] -= (s - 1.0);
    }
    kern.weights = std::move(raw);
    return kern;
}

/** One linear step.  Normalised L: circular correlation with the unit-sum
 *  weights, V must vanish.  Unnormalised Ltilde: the same correlation scaled by
 *  the prefactor Z and multiplied pointwise by e^{h V(x)/(2 nu)}, which is the
 *  literal discrete velocity integral with L(x,v) = K(v) - V(x). */
inline Field step_linear(const Field& u, const EntropyKernel& kernel, const PotentialSpec& V) {
    if (!(u.grid == kernel.grid)) throw std::invalid_argument("step_linear: grid mismatch");
    if (kernel.normalised && !V.is_zero())
        throw std::invalid_argument(
            "step_linear: the normalised operator carries no potential; "
            "use an unnormalised kernel for V != 0");
    Field out = correlate(u, kernel.weights);
    if (!kernel.normalised) {
        const double pref = kernel.prefactor;
        const double fac = kernel.h / (2.0 * kernel.nu);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] *= pref * std::exp(fac * V(u.grid.point(i)));
    }
    return out;
}

/** G[S] = -2 nu ln( Ltilde[ e^{-S/(2 nu)} ] ), the Cole-Hopf composition of the
 *  discrete variational step.  Matches the dense velocity quadrature of the
 *  defining integral within quadrature tolerance. */
inline InverseResult apply_G(const Field& S, const ProblemSpec& problem,
                             const SchemeParams& params) {
    EntropyKernel kern = build_kernel(problem, params, S.grid, /*normalised=*/false);
    TransformConfig cfg(problem.nu);
    Field u = colehopf_forward(S, cfg);
    Field Lu = step_linear(u, kern, problem.potential);
    return colehopf_inverse(Lu, cfg);
}

/** Dense-quadrature evaluation of G[S](x) straight from the velocity integral,
 *  with S evaluated off-grid by trigonometric interpolation.  Independent of
 *  the convolution path; used as its oracle. */
inline double apply_G_quadrature(const Field& S, std::size_t point_index,
                                 const ProblemSpec& problem, const SchemeParams& params) {
    if (S.grid.dim != 1)
        throw std::invalid_argument("apply_G_quadrature: dense quadrature is provided in 1D");
    const double h = params.h;
    const double nu = problem.nu;
    const double R = params.velocity_radius;
    const int nq = params.quad_points;
    const double dv = 2.0 * R / (nq - 1);
    TrigInterpolant Sx(S);
    const auto x = S.grid.point(point_index);
    double acc = 0.0;
    Vec v1(1);
    for (int q = 0; q < nq; ++q) {
        const double v = -R + q * dv;
        v1[0] = v;
        const double Sshift = Sx({x[0] + h * v, 0.0, 0.0});
        const double lag = problem.kinetic.eval(v1) - problem.potential(x);
        const double w = std::exp(-(h * lag + Sshift) / (2.0 * nu));
        acc += (q == 0 || q == nq - 1) ? 0.5 * w : w;  // trapezoid
    }
    return -2.0 * nu * std::log(acc * dv);
}

/** The entropy functional F[gamma] = int (h L(x,v) + S(x+hv) + 2 nu ln gamma) gamma dv
 *  evaluated at the Gibbs density raised to inverse temperature 1/widening
 *  (widening = 1 gives the minimiser).  Dense 1D quadrature. */
inline double gibbs_functional(const Field& S, std::size_t point_index,
                               const ProblemSpec& problem, const SchemeParams& params,
                               double widening = 1.0) {
    if (S.grid.dim != 1)
        throw std::invalid_argument("gibbs_functional: dense quadrature is provided in 1D");
    const double h = params.h;
    const double nu = problem.nu;
    const double R = params.velocity_radius;
    const int nq = params.quad_points;
    const double dv = 2.0 * R / (nq - 1);
    TrigInterpolant Sx(S);
    const auto x = S.grid.point(point_index);
    std::vector<double> energy(nq);
    Vec v1(1);
    for (int q = 0; q < nq; ++q) {
        const double v = -R + q * dv;
        v1[0] = v;
        energy[q] = h * (problem.kinetic.eval(v1) - problem.potential(x)) +
                    Sx({x[0] + h * v, 0.0, 0.0});
    }
    // gamma ~ e^{-E/(2 nu widening)}, normalised by trapezoid quadrature
    double z = 0.0;
    std::vector<double> gamma(nq);
    for (int q = 0; q < nq; ++q) {
        gamma[q] = std::exp(-energy[q] / (2.0 * nu * widening));
        z += (q == 0 || q == nq - 1) ? 0.5 * gamma[q] : gamma[q];
    }
    z *= dv;
    double val = 0.0;
    for (int q = 0; q < nq; ++q) {
        const double g = gamma[q] / z;
        if (g <= 0.0) continue;
        const double integrand = (energy[q] + 2.0 * nu * std::log(g)) * g;
        val += (q == 0 || q == nq - 1) ? 0.5 * integrand : integrand;
    }
    return val * dv;
}

/** Evaluates the variational functional at the Gibbs minimiser and returns it
 *  alongside the convolution-path G[S](x); the two agree within quadrature
 *  tolerance because the Gibbs density is the minimiser. */
struct GibbsCheck {
    double value_at_gibbs;
    double value_of_G;
};

inline GibbsCheck gibbs_variational_check(const Field& S, std::size_t point_index,
                                          const ProblemSpec& problem,
                                          const SchemeParams& params) {
    GibbsCheck out{};
    out.value_at_gibbs = gibbs_functional(S, point_index, problem, params, 1.0);
    InverseResult G = apply_G(S, problem, params);
    out.value_of_G = G.S[point_index];
    return out;
}

/** One checkpoint of the time-marching driver. */
struct Checkpoint {
    int step;
    double time;
    Field u;
    Field S;
    double norm_u;
};

struct Trajectory {
    std::vector<Checkpoint> checkpoints;
    /** Accumulated log of the velocity-integral prefactor dropped per step when
     *  marching with V != 0; the literal Ltilde amplitude is
     *  u * exp(accumulated_log_prefactor), an additive constant in S that the
     *  normalisation freedom of the transform absorbs. */
    double accumulated_log_prefactor = 0.0;
};

/** Algorithm-1 style marching: u^0 = e^{-S0/(2 nu)}, u^{n+1} = L[u^n] with the
 *  unit-sum kernel; a nonzero V enters through the pointwise e^{h V/(2 nu)}
 *  factor of the unnormalised operator. */
inline Trajectory march(const ProblemSpec& problem, const SchemeParams& params, const Grid& grid,
                        int checkpoint_every = 0) {
    TransformConfig cfg(problem.nu);
    Field S0 = problem.sample_initial(grid);
    Field u = colehopf_forward(S0, cfg);
    EntropyKernel kern = build_kernel(problem, params, grid, /*normalised=*/true);
    const bool with_V = !problem.potential.is_zero();
    std::vector<double> vfac;
    if (with_V) {
        vfac.resize(grid.size());
        const double fac = params.h / (2.0 * problem.nu);
        for (std::size_t i = 0; i < grid.size(); ++i)
            vfac[i] = std::exp(fac * problem.potential(grid.point(i)));
    }

    Trajectory traj;
    auto record = [&](int n) {
        Checkpoint cp{n, n * params.h, u, colehopf_inverse(u, cfg).S, norm_l2(u)};
        traj.checkpoints.push_back(std::move(cp));
    };
    record(0);
    for (int n = 1; n <= params.n_steps; ++n) {
        u = correlate(u, kern.weights);
        if (with_V) {
            for (std::size_t i = 0; i < u.size(); ++i) u[i] *= vfac[i];
            traj.accumulated_log_prefactor += std::log(kern.prefactor);
        }
        for (double val : u.values)
            if (!std::isfinite(val))
                throw std::runtime_error("march: non-finite value at step " + std::to_string(n));
        if ((checkpoint_every > 0 && n % checkpoint_every == 0) || n == params.n_steps) record(n);
    }
    return traj;
}

/** Write trajectory checkpoints as Field files plus a manifest carrying step
 *  index, time and norms. */
inline void write_trajectory(const Trajectory& traj, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "trajectory.csv");
    if (!manifest) throw std::runtime_error("write_trajectory: cannot open manifest in " + dir);
    manifest << "step,time,norm_u,file\n";
    for (const auto& cp : traj.checkpoints) {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_%05d.csv", cp.step);
        save_csv(cp.S, (fs::path(dir) / name).string());
        manifest << cp.step << "," << fmt_double(cp.time) << "," << fmt_double(cp.norm_u) << ","
                 << name << "\n";
    }
}

}  // namespace vhj
