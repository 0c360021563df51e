#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "io.hpp"
#include "schrod.hpp"

namespace vhj {

/** Finite-shot sampling plan; the same (seed, stream) pair always reproduces
 *  the same draws, and concurrent estimators take disjoint streams. */
struct ShotPlan {
    long shots = 10000;
    uint64_t seed = 0;
    uint64_t stream = 0;
    double confidence = 0.05;  // delta

    std::mt19937_64 make_rng() const {
        std::seed_seq seq{seed, stream, uint64_t(0x9e3779b97f4a7c15ULL)};
        return std::mt19937_64(seq);
    }
};

/** Bernoulli channel through which the squared norm is estimated: success
 *  probability p_succ, estimate = (hits/shots) * scale.  The schrod recovery
 *  provides (p_succ, scale) directly; the reference factory mirrors the
 *  xi* -> 0 exponential-ancilla tail, where half the profile mass succeeds. */
struct NormChannel {
    double norm_sq_exact = 1.0;
    double p_succ = 0.5;
    double scale = 2.0;

    static NormChannel exact_reference(double norm_sq) {
        return NormChannel{norm_sq, 0.5, 2.0 * norm_sq};
    }

    static NormChannel reference(double norm_sq, double norm0_sq) {
        if (norm_sq > norm0_sq * (1.0 + 1e-12))
            throw std::invalid_argument("NormChannel: norm_sq must not exceed the reference norm");
        return NormChannel{norm_sq, 0.5 * norm_sq / norm0_sq, 2.0 * norm0_sq};
    }

    static NormChannel from_schrod(const RecoveryResult& rec) {
        const double nsq = rec.norm_estimate * rec.norm_estimate;
        return NormChannel{nsq, rec.p_succ, nsq / std::max(rec.p_succ, 1e-300)};
    }

    double sample_norm_sq(std::mt19937_64& rng, long shots) const {
        std::binomial_distribution<long> bin(shots, p_succ);
        const long hits = bin(rng);
        return (static_cast<double>(hits) / shots) * scale;
    }
};

/** One estimated observable with its exact-mode reference and the predicted
 *  error-budget terms of the protocol, all constants 1. */
struct EstimateReport {
    std::string protocol;
    std::string mode;  // "exact" or "shots"
    double estimate = 0.0;
    double exact_value = 0.0;
    double std_error = 0.0;
    long shots = 0;
    uint64_t seed = 0;
    std::string provenance;  // config hash of the run that produced the state
    std::map<std::string, double> budget;
    std::map<std::string, double> extra;
    std::vector<std::string> flags;

    std::string to_json() const {
        std::ostringstream os;
        os << "{\n";
        os << "  \"protocol\": \"" << protocol << "\",\n";
        os << "  \"mode\": \"" << mode << "\",\n";
        os << "  \"provenance\": \"" << provenance << "\",\n";
        os << "  \"estimate\": " << fmt_double(estimate) << ",\n";
        os << "  \"exact_value\": " << fmt_double(exact_value) << ",\n";
        os << "  \"std_error\": " << fmt_double(std_error) << ",\n";
        os << "  \"shots\": " << shots << ",\n";
        os << "  \"seed\": " << seed << ",\n";
        os << "  \"budget\": {";
        bool first = true;
        for (const auto& [k, v] : budget) {
            os << (first ? "" : ", ") << "\"" << k << "\": " << fmt_double(v);
            first = false;
        }
        os << "},\n  \"extra\": {";
        first = true;
        for (const auto& [k, v] : extra) {
            os << (first ? "" : ", ") << "\"" << k << "\": " << fmt_double(v);
            first = false;
        }
        os << "},\n  \"flags\": [";
        first = true;
        for (const auto& f : flags) {
            os << (first ? "" : ", ") << "\"" << f << "\"";
            first = false;
        }
        os << "]\n}";
        return os.str();
    }
};

namespace detail {

/** Multinomial sampling over grid outcomes with probabilities |u_j|^2/||u||^2;
 *  returns counts.  Draws use inverse-CDF binary search. */
template <class T>
std::vector<long> sample_grid_counts(const FieldT<T>& u, long shots, std::mt19937_64& rng) {
    std::vector<double> cdf(u.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        acc += std::norm(cplx(u[i]));
        cdf[i] = acc;
    }
    std::uniform_real_distribution<double> uni(0.0, acc);
    std::vector<long> counts(u.size(), 0);
    for (long s = 0; s < shots; ++s) {
        const double r = uni(rng);
        auto it = std::lower_bound(cdf.begin(), cdf.end(), r);
        counts[static_cast<std::size_t>(it - cdf.begin())]++;
    }
    return counts;
}

}  // namespace detail

/** S(t, x_a) = -nu ln |<x_a|u>|^2 - nu ln ||u||^2.  The first factor is the
 *  normalised-state outcome probability (independent of the array's numeric
 *  scale); the second comes from the norm channel, which defaults to the
 *  field's own squared norm and then collapses to the -2 nu ln |u(x_a)|
 *  identity. */
template <class T>
EstimateReport value_at_point(const FieldT<T>& u, std::size_t a, double nu,
                              const std::optional<ShotPlan>& plan = std::nullopt,
                              std::optional<NormChannel> channel = std::nullopt) {
    if (a >= u.size()) throw std::invalid_argument("value_at_point: index out of range");
    const double norm_sq = norm_l2(u) * norm_l2(u);
    const double p_a = std::norm(cplx(u[a])) / norm_sq;
    if (p_a <= 0.0) throw std::invalid_argument("value_at_point: u vanishes at the point");
    if (!channel) channel = NormChannel::exact_reference(norm_sq);
    const double exact = -nu * std::log(p_a) - nu * std::log(channel->norm_sq_exact);

    EstimateReport rep;
    rep.protocol = "value_at_point";
    rep.exact_value = exact;
    rep.budget["nu"] = nu;
    rep.budget["d"] = u.grid.dim;
    rep.budget["n_x"] = u.grid.n;
    if (!plan) {
        rep.mode = "exact";
        rep.estimate = exact;
        return rep;
    }
    rep.mode = "shots";
    rep.shots = plan->shots;
    rep.seed = plan->seed;
    auto rng = plan->make_rng();
    auto counts = detail::sample_grid_counts(u, plan->shots, rng);
    double p_hat = static_cast<double>(counts[a]) / plan->shots;
    if (counts[a] == 0) {
        rep.flags.push_back("zero_count_lower_bound");
        p_hat = 1.0 / plan->shots;
    }
    const double nsq_hat = channel->sample_norm_sq(rng, plan->shots);
    rep.estimate = -nu * std::log(p_hat) - nu * std::log(std::max(nsq_hat, 1e-300));
    // delta-method error: var(S) ~ nu^2 [ (1-p)/(p N) + (1-q)/(q N) ]
    const double q = channel->p_succ;
    rep.std_error = nu * std::sqrt((1.0 - p_a) / (p_a * plan->shots) +
                                   (1.0 - q) / (q * plan->shots));
    return rep;
}

/** Post-selected ancilla qubit of the weak-measurement gradient protocol. */
struct QubitProbeState {
    cplx amp0;
    cplx amp1;
    double phi = 0.0;  // projection success probability

    void normalise() {
        const double n = std::sqrt(std::norm(amp0) + std::norm(amp1));
        if (n <= 0.0) throw std::runtime_error("QubitProbeState: null state");
        amp0 /= n;
        amp1 /= n;
    }
    double sigma_z() const { return std::norm(amp0) - std::norm(amp1); }
    double sigma_x() const { return 2.0 * (std::conj(amp0) * amp1).real(); }
    double sigma_y() const { return 2.0 * (std::conj(amp0) * amp1).imag(); }
};

/** Build the joint state exp(2 i kappa nu P_k (x) sigma_x)(u (x) |0>) exactly
 *  by applying exp(+-2 i kappa nu P_k) on the two sigma_x half-registers,
 *  project onto x_a, and read the probe. */
template <class T>
QubitProbeState gradient_probe(const FieldT<T>& u, std::size_t a, int axis, double nu,
                               double kappa) {
    const Grid& g = u.grid;
    const double dx = g.spacing();
    // P_k = -i * central difference has the real symbol sin(2 pi m dx)/dx
    auto mult_plus = [&](const std::array<int, 3>& m) {
        return std::polar(1.0, 2.0 * kappa * nu * std::sin(2.0 * M_PI * m[axis] * dx) / dx);
    };
    auto mult_minus = [&](const std::array<int, 3>& m) {
        return std::polar(1.0, -2.0 * kappa * nu * std::sin(2.0 * M_PI * m[axis] * dx) / dx);
    };
    ComplexField uc = [&] {
        if constexpr (std::is_same_v<T, double>) return to_complex(u);
        else return u;
    }();
    ComplexField up = fft_multiplier(uc, mult_plus);
    ComplexField um = fft_multiplier(uc, mult_minus);
    QubitProbeState probe;
    probe.amp0 = 0.5 * (up[a] + um[a]);
    probe.amp1 = 0.5 * (up[a] - um[a]);
    const double nsq = norm_l2(u) * norm_l2(u);
    probe.phi = (std::norm(probe.amp0) + std::norm(probe.amp1)) / nsq;
    if (probe.phi <= 0.0) throw std::runtime_error("gradient_probe: zero projection probability");
    probe.normalise();
    return probe;
}

/** |grad_k S(x_a)| via the ancilla-qubit weak measurement; the magnitude comes
 *  from <sigma_z>, the signed real/imag parts from <sigma_x>, <sigma_y>. */
template <class T>
EstimateReport gradient_at_point(const FieldT<T>& u, std::size_t a, int axis, double nu,
                                 double kappa, const std::optional<ShotPlan>& plan = std::nullopt) {
    if (kappa <= 0.0 || kappa > 0.2)
        throw std::invalid_argument("gradient_at_point: kappa must lie in (0, 0.2]");
    QubitProbeState probe = gradient_probe(u, a, axis, nu, kappa);
    const double sz = probe.sigma_z();
    if (sz <= -1.0 + 1e-12)
        throw std::runtime_error("gradient_at_point: <sigma_z> at the formula singularity");

    auto magnitude = [&](double z) {
        const double arg = 2.0 / (1.0 + z) - 1.0;
        return std::sqrt(std::max(arg, 0.0)) / kappa;
    };

    EstimateReport rep;
    rep.protocol = "gradient_at_point";
    rep.exact_value = magnitude(sz);
    rep.budget["kappa_sq_bias"] = kappa * kappa;
    rep.budget["nu"] = nu;
    rep.budget["d"] = u.grid.dim;
    rep.extra["phi"] = probe.phi;
    rep.extra["sigma_z"] = sz;
    rep.extra["sigma_x"] = probe.sigma_x();
    rep.extra["sigma_y"] = probe.sigma_y();
    {
        const double gsq = std::max(2.0 / (1.0 + sz) - 1.0, 0.0);
        rep.extra["re_g"] = -probe.sigma_x() * (1.0 + gsq) / (2.0 * kappa);
        rep.extra["im_g"] = -probe.sigma_y() * (1.0 + gsq) / (2.0 * kappa);
    }
    if (!plan) {
        rep.mode = "exact";
        rep.estimate = rep.exact_value;
        return rep;
    }
    rep.mode = "shots";
    rep.shots = plan->shots;
    rep.seed = plan->seed;
    auto rng = plan->make_rng();
    std::bernoulli_distribution bz(0.5 * (1.0 + sz));
    long up_count = 0;
    for (long s = 0; s < plan->shots; ++s) up_count += bz(rng) ? 1 : 0;
    const double sz_hat = 2.0 * static_cast<double>(up_count) / plan->shots - 1.0;
    if (sz_hat <= -1.0 + 1e-12) {
        rep.flags.push_back("sigma_z_singular_sample");
        rep.estimate = magnitude(-1.0 + 1e-12);
    } else {
        rep.estimate = magnitude(std::min(sz_hat, 1.0));
    }
    // delta method: d|g|/dz = -1/(kappa^2 |g| (1+z)^2)
    const double gmag = std::max(rep.exact_value, 1e-12);
    const double var_z = (1.0 - sz * sz) / plan->shots;
    rep.std_error = std::sqrt(var_z) / (kappa * kappa * gmag * (1.0 + sz) * (1.0 + sz));
    return rep;
}

/** S_min from the norm: estimate = -nu ln ||u||^2 with the exact two-sided
 *  LSE bracket [estimate, estimate + nu d ln n_x] for S_min. */
inline EstimateReport min_value(double norm_sq, double nu, int n_x, int d,
                                const std::optional<ShotPlan>& plan = std::nullopt,
                                std::optional<NormChannel> channel = std::nullopt) {
    if (norm_sq <= 0.0) throw std::invalid_argument("min_value: norm_sq must be positive");
    const double exact = -nu * std::log(norm_sq);
    EstimateReport rep;
    rep.protocol = "min_value";
    rep.exact_value = exact;
    rep.budget["eps_min"] = std::sqrt(nu) * d + nu * d * std::log(1.0 / nu) / 4.0;
    rep.budget["lse_width"] = nu * d * std::log(static_cast<double>(n_x));
    rep.extra["bracket_lo"] = exact;
    rep.extra["bracket_hi"] = exact + nu * d * std::log(static_cast<double>(n_x));
    if (!plan) {
        rep.mode = "exact";
        rep.estimate = exact;
        return rep;
    }
    if (!channel) channel = NormChannel::exact_reference(norm_sq);
    rep.mode = "shots";
    rep.shots = plan->shots;
    rep.seed = plan->seed;
    auto rng = plan->make_rng();
    const double nsq_hat = channel->sample_norm_sq(rng, plan->shots);
    if (nsq_hat <= 0.0) {
        rep.flags.push_back("zero_success_count");
        rep.estimate = -nu * std::log(channel->scale / plan->shots);
    } else {
        rep.estimate = -nu * std::log(nsq_hat);
    }
    const double q = channel->p_succ;
    rep.std_error = nu * std::sqrt((1.0 - q) / (q * plan->shots));
    return rep;
}

/** <f(X)> = sum f(x_j)|u_j|^2 / sum |u_j|^2, the estimator of f at the
 *  minimiser of S; shot mode averages f over multinomial grid outcomes. */
template <class T>
EstimateReport f_at_argmin(const FieldT<T>& u,
                           const std::function<double(const std::array<double, 3>&)>& f,
                           double nu, const std::optional<ShotPlan>& plan = std::nullopt) {
    const Grid& g = u.grid;
    std::vector<double> fvals(u.size());
    double fref = f(g.point(0));
    for (std::size_t i = 0; i < u.size(); ++i) fvals[i] = f(g.point(i));
    // shift-stabilised weighted mean: constant f comes out exactly
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double w = std::norm(cplx(u[i]));
        num += (fvals[i] - fref) * w;
        den += w;
    }
    const double exact = fref + num / den;
    EstimateReport rep;
    rep.protocol = "f_at_argmin";
    rep.exact_value = exact;
    rep.budget["laplace_bias"] = g.dim * nu;                      // O(d nu)
    rep.budget["midpoint"] = 1.0 / (nu * g.n * static_cast<double>(g.n));  // O(1/(nu N_x^2))
    if (!plan) {
        rep.mode = "exact";
        rep.estimate = exact;
        return rep;
    }
    rep.mode = "shots";
    rep.shots = plan->shots;
    rep.seed = plan->seed;
    auto rng = plan->make_rng();
    auto counts = detail::sample_grid_counts(u, plan->shots, rng);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s1 += counts[i] * fvals[i];
        s2 += counts[i] * fvals[i] * fvals[i];
    }
    rep.estimate = s1 / plan->shots;
    const double var = std::max(s2 / plan->shots - rep.estimate * rep.estimate, 0.0);
    rep.std_error = std::sqrt(var / plan->shots);
    return rep;
}

/** Measured error vs shot count for one estimator on a fixed instance, with
 *  the lemma-shaped 1/sqrt(shots) prediction anchored at the first rung. */
struct ShotCostRow {
    long shots;
    double measured_std;
    double predicted_std;
};

inline std::vector<ShotCostRow> shot_cost_curve(
    const std::function<double(const ShotPlan&)>& estimator_estimate, double exact_value,
    const std::vector<long>& ladder, uint64_t seed, int replicates = 24) {
    if (ladder.size() < 2) throw std::invalid_argument("shot_cost_curve: need at least 2 rungs");
    std::vector<ShotCostRow> rows;
    double anchor = 0.0;
    for (std::size_t r = 0; r < ladder.size(); ++r) {
        double acc = 0.0;
        for (int rep = 0; rep < replicates; ++rep) {
            ShotPlan plan;
            plan.shots = ladder[r];
            plan.seed = seed;
            plan.stream = static_cast<uint64_t>(r * 1000 + rep + 1);
            const double est = estimator_estimate(plan);
            acc += (est - exact_value) * (est - exact_value);
        }
        const double rms = std::sqrt(acc / replicates);
        if (r == 0) anchor = rms * std::sqrt(static_cast<double>(ladder[0]));
        rows.push_back({ladder[r], rms, anchor / std::sqrt(static_cast<double>(ladder[r]))});
    }
    return rows;
}

inline void write_cost_curve_csv(const std::vector<ShotCostRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_cost_curve_csv: cannot open " + path);
    os << "shots,measured_std,predicted_std\n";
    for (const auto& r : rows)
        os << r.shots << "," << fmt_double(r.measured_std) << "," << fmt_double(r.predicted_std)
           << "\n";
}

/** Least-squares log-log slope of (x, y) pairs; used by sweeps and tests. */
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need matching arrays of length >= 2");
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace vhj
