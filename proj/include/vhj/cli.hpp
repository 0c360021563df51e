#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "colehopf.hpp"
#include "entropy.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "observables.hpp"
#include "oracles.hpp"
#include "parabolic.hpp"
#include "problems.hpp"
#include "schrod.hpp"

namespace vhj {

using json = nlohmann::json;

/** Schema violations; the CLI maps these to exit code 2. */
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         const std::set<std::string>& allowed,
                         const std::set<std::string>& required) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
    for (const auto& k : required) {
        if (!j.contains(k)) throw ConfigError(where + ": missing required key '" + k + "'");
    }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace detail

/** Fully resolved run configuration. */
struct RunConfig {
    // problem
    std::string kinetic_kind = "half_quadratic";
    double kinetic_shift = 0.0;
    std::string potential_kind = "zero";
    double potential_value = 0.0;
    int potential_mode = 1;
    std::string initial_kind = "cos_bump";
    double initial_amplitude = 1.0;
    int initial_mode = 1;
    double initial_value = 0.0;
    double nu = 0.05;
    // grid
    int dim = 1;
    int n_x = 128;
    // scheme: either (h, T) explicit or epsilon-driven
    double h = 0.0;
    double T = 0.1;
    int checkpoint_every = 0;
    std::optional<double> epsilon;
    std::string epsilon_target = "value";
    // pipeline
    std::string pipeline = "parabolic";
    // estimators
    std::vector<int> value_points;
    std::vector<int> gradient_points;
    int gradient_axis = 0;
    double gradient_kappa = 0.05;
    bool want_min_value = false;
    std::string f_moment;  // "", "x_squared", "x"
    // shots
    bool shots_enabled = false;
    long shots = 10000;
    // schrod ancilla
    int n_xi = 64;
    // misc
    uint64_t seed = 0;
    std::string output = "out";

    json resolved() const {
        json j;
        j["problem"]["kinetic"]["kind"] = kinetic_kind;
        j["problem"]["kinetic"]["shift"] = kinetic_shift;
        j["problem"]["potential"]["kind"] = potential_kind;
        j["problem"]["potential"]["value"] = potential_value;
        j["problem"]["potential"]["mode"] = potential_mode;
        j["problem"]["initial"]["kind"] = initial_kind;
        j["problem"]["initial"]["amplitude"] = initial_amplitude;
        j["problem"]["initial"]["mode"] = initial_mode;
        j["problem"]["initial"]["value"] = initial_value;
        j["problem"]["nu"] = nu;
        j["grid"]["d"] = dim;
        j["grid"]["n_x"] = n_x;
        j["scheme"]["h"] = h;
        j["scheme"]["T"] = T;
        j["scheme"]["checkpoint_every"] = checkpoint_every;
        if (epsilon) {
            j["scheme"]["epsilon"] = *epsilon;
            j["scheme"]["target"] = epsilon_target;
        }
        j["pipeline"] = pipeline;
        j["estimators"]["value_points"] = value_points;
        j["estimators"]["gradient"]["points"] = gradient_points;
        j["estimators"]["gradient"]["axis"] = gradient_axis;
        j["estimators"]["gradient"]["kappa"] = gradient_kappa;
        j["estimators"]["min_value"] = want_min_value;
        j["estimators"]["f_moment"] = f_moment;
        j["shots"]["enabled"] = shots_enabled;
        j["shots"]["count"] = shots;
        j["schrod"]["n_xi"] = n_xi;
        j["seed"] = seed;
        j["output"] = output;
        return j;
    }
};

inline RunConfig parse_config(const json& j) {
    using detail::get_or;
    using detail::require_keys;
    require_keys(j, "config",
                 {"problem", "grid", "scheme", "pipeline", "estimators", "shots", "schrod", "seed",
                  "output"},
                 {"problem", "grid", "scheme", "pipeline"});
    RunConfig c;

    const json& p = j.at("problem");
    require_keys(p, "problem", {"kinetic", "potential", "initial", "nu"}, {"kinetic", "initial", "nu"});
    const json& kin = p.at("kinetic");
    require_keys(kin, "problem.kinetic", {"kind", "shift"}, {"kind"});
    c.kinetic_kind = kin.at("kind").get<std::string>();
    if (c.kinetic_kind != "quadratic" && c.kinetic_kind != "half_quadratic" &&
        c.kinetic_kind != "quartic")
        throw ConfigError("problem.kinetic.kind: must be quadratic, half_quadratic or quartic");
    c.kinetic_shift = get_or(kin, "shift", 0.0);
    if (p.contains("potential")) {
        const json& v = p.at("potential");
        require_keys(v, "problem.potential", {"kind", "value", "mode"}, {"kind"});
        c.potential_kind = v.at("kind").get<std::string>();
        if (c.potential_kind != "zero" && c.potential_kind != "constant" &&
            c.potential_kind != "cosine")
            throw ConfigError("problem.potential.kind: must be zero, constant or cosine");
        c.potential_value = get_or(v, "value", 0.0);
        c.potential_mode = get_or(v, "mode", 1);
    }
    const json& ini = p.at("initial");
    require_keys(ini, "problem.initial", {"kind", "amplitude", "mode", "value"}, {"kind"});
    c.initial_kind = ini.at("kind").get<std::string>();
    if (c.initial_kind != "cos_bump" && c.initial_kind != "sine" && c.initial_kind != "quadratic" &&
        c.initial_kind != "constant")
        throw ConfigError("problem.initial.kind: must be cos_bump, sine, quadratic or constant");
    c.initial_amplitude = get_or(ini, "amplitude", 1.0);
    c.initial_mode = get_or(ini, "mode", 1);
    c.initial_value = get_or(ini, "value", 0.0);
    c.nu = p.at("nu").get<double>();
    if (c.nu <= 0.0) throw ConfigError("problem.nu: must be positive");

    const json& g = j.at("grid");
    require_keys(g, "grid", {"d", "n_x"}, {"d", "n_x"});
    c.dim = g.at("d").get<int>();
    c.n_x = g.at("n_x").get<int>();
    if (c.dim < 1 || c.dim > 3) throw ConfigError("grid.d: must be 1, 2 or 3");
    if (c.n_x < 4 || c.n_x % 2 != 0) throw ConfigError("grid.n_x: must be even and >= 4");

    const json& s = j.at("scheme");
    require_keys(s, "scheme", {"h", "T", "epsilon", "target", "checkpoint_every"}, {});
    c.T = get_or(s, "T", 0.1);
    c.checkpoint_every = get_or(s, "checkpoint_every", 0);
    if (s.contains("epsilon")) {
        c.epsilon = s.at("epsilon").get<double>();
        c.epsilon_target = get_or<std::string>(s, "target", "value");
        if (c.epsilon_target != "value" && c.epsilon_target != "gradient")
            throw ConfigError("scheme.target: must be value or gradient");
        auto sel = select_parameters(*c.epsilon, c.dim,
                                     c.epsilon_target == "value" ? PrecisionTarget::value
                                                                 : PrecisionTarget::gradient);
        c.nu = sel.nu;
        // snap h to an integer divisor of T
        int n = std::max(1, static_cast<int>(std::ceil(c.T / sel.h)));
        c.h = c.T / n;
    } else {
        if (!s.contains("h")) throw ConfigError("scheme: needs either h or epsilon");
        c.h = s.at("h").get<double>();
    }
    if (c.h <= 0.0 || c.T <= 0.0) throw ConfigError("scheme: h and T must be positive");

    c.pipeline = j.at("pipeline").get<std::string>();
    if (c.pipeline != "entropy_march" && c.pipeline != "parabolic" && c.pipeline != "schrod")
        throw ConfigError("pipeline: must be entropy_march, parabolic or schrod");

    if (j.contains("estimators")) {
        const json& e = j.at("estimators");
        require_keys(e, "estimators", {"value_points", "gradient", "min_value", "f_moment"}, {});
        c.value_points = get_or(e, "value_points", std::vector<int>{});
        if (e.contains("gradient")) {
            const json& gr = e.at("gradient");
            require_keys(gr, "estimators.gradient", {"points", "axis", "kappa"}, {"points"});
            c.gradient_points = gr.at("points").get<std::vector<int>>();
            c.gradient_axis = get_or(gr, "axis", 0);
            c.gradient_kappa = get_or(gr, "kappa", 0.05);
        }
        c.want_min_value = get_or(e, "min_value", false);
        c.f_moment = get_or<std::string>(e, "f_moment", "");
        if (!c.f_moment.empty() && c.f_moment != "x_squared" && c.f_moment != "x")
            throw ConfigError("estimators.f_moment: must be empty, x_squared or x");
    }
    if (j.contains("shots")) {
        const json& sh = j.at("shots");
        require_keys(sh, "shots", {"enabled", "count"}, {});
        c.shots_enabled = get_or(sh, "enabled", false);
        c.shots = get_or<long>(sh, "count", 10000);
        if (c.shots < 1) throw ConfigError("shots.count: must be >= 1");
    }
    if (j.contains("schrod")) {
        const json& sc = j.at("schrod");
        require_keys(sc, "schrod", {"n_xi"}, {});
        c.n_xi = get_or(sc, "n_xi", 64);
    }
    c.seed = get_or<uint64_t>(j, "seed", 0);
    c.output = get_or<std::string>(j, "output", "out");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

inline ProblemSpec build_problem(const RunConfig& c) {
    KineticSpec K = c.kinetic_kind == "quadratic"
                        ? KineticSpec::quadratic(c.dim, c.kinetic_shift)
                        : (c.kinetic_kind == "half_quadratic" ? KineticSpec::half_quadratic(c.dim)
                                                              : KineticSpec::quartic(c.dim));
    PotentialSpec V = PotentialSpec::zero();
    if (c.potential_kind == "constant") V = PotentialSpec::constant(c.potential_value);
    if (c.potential_kind == "cosine") V = PotentialSpec::cosine(c.potential_value, c.potential_mode);

    std::function<double(const std::array<double, 3>&)> S0;
    const double amp = c.initial_amplitude;
    const int mode = c.initial_mode;
    const double val = c.initial_value;
    const int dim = c.dim;
    if (c.initial_kind == "cos_bump") {
        S0 = [amp, mode, dim](const std::array<double, 3>& x) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += 1.0 - std::cos(2.0 * M_PI * mode * x[k]);
            return amp * s;
        };
    } else if (c.initial_kind == "sine") {
        S0 = [amp, mode, dim](const std::array<double, 3>& x) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += std::sin(2.0 * M_PI * mode * x[k]);
            return amp * s;
        };
    } else if (c.initial_kind == "quadratic") {
        S0 = [amp, dim](const std::array<double, 3>& x) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += x[k] * x[k];
            return amp * s;
        };
    } else {
        S0 = [val](const std::array<double, 3>&) { return val; };
    }
    return ProblemSpec(std::move(K), std::move(V), std::move(S0), c.nu);
}

/** Pipeline output: the transformed field u at time T and the recovered S. */
struct PipelineResult {
    ComplexField u;
    Field S;
    double norm_u0 = 0.0;
    std::optional<RecoveryResult> schrod_recovery;
    std::optional<SchrodState> schrod_state;
    std::optional<Trajectory> trajectory;
};

inline PipelineResult run_pipeline(const RunConfig& c, const ProblemSpec& prob, const Grid& grid) {
    TransformConfig tc(prob.nu);
    PipelineResult out;
    out.norm_u0 = norm_l2(colehopf_forward(prob.sample_initial(grid), tc));
    if (c.pipeline == "entropy_march") {
        SchemeParams params = SchemeParams::make(c.h, c.T, prob.nu);
        Trajectory traj = march(prob, params, grid, c.checkpoint_every);
        out.u = to_complex(traj.checkpoints.back().u);
        out.S = traj.checkpoints.back().S;
        out.trajectory = std::move(traj);
        return out;
    }
    const Pipeline pipe = c.kinetic_kind == "half_quadratic" ? Pipeline::quadratic
                                                             : Pipeline::general_empirical;
    if (c.pipeline == "parabolic") {
        out.S = solve_S(prob, grid, c.T, {}, pipe);
        Field u0 = colehopf_forward(prob.sample_initial(grid), tc);
        LinearPdeCoefficients co = pipe == Pipeline::quadratic
                                       ? coefficients_quadratic(prob, grid.dim)
                                       : coefficients_general(prob);
        if (pipe != Pipeline::quadratic && !prob.potential.is_zero()) {
            const double nu = prob.nu;
            auto V = prob.potential;
            co.a = [V, nu](const std::array<double, 3>& x) { return V(x) / (2.0 * nu); };
        }
        out.u = to_complex(evolve(u0, co, c.T));
        return out;
    }
    // schrod pipeline
    if (grid.size() > 4096)
        throw ConfigError("schrod pipeline: statevector emulation needs n_x^d <= 4096");
    LinearPdeCoefficients co = pipe == Pipeline::quadratic ? coefficients_quadratic(prob, grid.dim)
                                                           : coefficients_general(prob);
    if (pipe != Pipeline::quadratic && !prob.potential.is_zero()) {
        const double nu = prob.nu;
        auto V = prob.potential;
        co.a = [V, nu](const std::array<double, 3>& x) { return V(x) / (2.0 * nu); };
    }
    SplitOperator op = assemble_A(co, grid);
    AncillaGrid anc = AncillaGrid::defaults(op, c.T, c.n_xi);
    Field u0 = colehopf_forward(prob.sample_initial(grid), tc);
    SchrodState st = schrod_evolve(u0, op, anc, c.T);
    RecoveryResult rec = recover(st);
    out.u = rec.u;
    out.S = colehopf_inverse(rec.u, tc).S;
    out.schrod_recovery = rec;
    out.schrod_state = std::move(st);
    return out;
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
}

}  // namespace detail

/** Execute a full run: pipeline, estimators in exact and shot mode, artifact
 *  files and the manifest.  Returns the artifact directory. */
inline std::string run(const RunConfig& c, const std::string& out_override = "") {
    namespace fs = std::filesystem;
    const std::string outdir = out_override.empty() ? c.output : out_override;
    fs::create_directories(outdir);

    ProblemSpec prob = build_problem(c);
    Grid grid = make_grid(c.dim, c.n_x);
    PipelineResult res = run_pipeline(c, prob, grid);

    save_csv(res.S, outdir + "/S.csv");
    save_csv(res.u, outdir + "/u.csv");
    save_binary(res.S, outdir + "/S.bin");
    if (res.trajectory) write_trajectory(*res.trajectory, outdir + "/checkpoints");
    if (res.schrod_state && res.schrod_recovery)
        write_schrod_dump(*res.schrod_state, *res.schrod_recovery, outdir + "/schrod");

    // estimators
    std::vector<EstimateReport> reports;
    const double norm_sq = norm_l2(res.u) * norm_l2(res.u);
    NormChannel channel = res.schrod_recovery
                              ? NormChannel::from_schrod(*res.schrod_recovery)
                              : NormChannel::reference(norm_sq, res.norm_u0 * res.norm_u0);
    uint64_t stream = 0;
    auto plan_for = [&](uint64_t s) {
        ShotPlan p;
        p.shots = c.shots;
        p.seed = c.seed;
        p.stream = s;
        return p;
    };
    for (int pt : c.value_points) {
        if (pt < 0 || static_cast<std::size_t>(pt) >= grid.size())
            throw ConfigError("estimators.value_points: index out of range");
        reports.push_back(value_at_point(res.u, static_cast<std::size_t>(pt), prob.nu));
        if (c.shots_enabled)
            reports.push_back(value_at_point(res.u, static_cast<std::size_t>(pt), prob.nu,
                                             plan_for(++stream), channel));
    }
    for (int pt : c.gradient_points) {
        if (pt < 0 || static_cast<std::size_t>(pt) >= grid.size())
            throw ConfigError("estimators.gradient.points: index out of range");
        reports.push_back(gradient_at_point(res.u, static_cast<std::size_t>(pt), c.gradient_axis,
                                            prob.nu, c.gradient_kappa));
        if (c.shots_enabled)
            reports.push_back(gradient_at_point(res.u, static_cast<std::size_t>(pt),
                                                c.gradient_axis, prob.nu, c.gradient_kappa,
                                                plan_for(++stream)));
    }
    if (c.want_min_value) {
        reports.push_back(min_value(norm_sq, prob.nu, grid.n, grid.dim));
        if (c.shots_enabled)
            reports.push_back(min_value(norm_sq, prob.nu, grid.n, grid.dim, plan_for(++stream), channel));
    }
    if (!c.f_moment.empty()) {
        auto f = c.f_moment == "x_squared"
                     ? std::function<double(const std::array<double, 3>&)>(
                           [](const std::array<double, 3>& x) { return x[0] * x[0]; })
                     : std::function<double(const std::array<double, 3>&)>(
                           [](const std::array<double, 3>& x) { return x[0]; });
        reports.push_back(f_at_argmin(res.u, f, prob.nu));
        if (c.shots_enabled) reports.push_back(f_at_argmin(res.u, f, prob.nu, plan_for(++stream)));
    }
    {
        char hash_hex[32];
        std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a(c.resolved().dump())));
        std::ostringstream os;
        os << "[\n";
        for (std::size_t i = 0; i < reports.size(); ++i) {
            reports[i].provenance = hash_hex;
            os << reports[i].to_json() << (i + 1 < reports.size() ? ",\n" : "\n");
        }
        os << "]\n";
        detail::write_text(fs::path(outdir) / "estimates.json", os.str());
    }

    json manifest = c.resolved();
    manifest["artifacts"] = {"S.csv", "u.csv", "S.bin", "estimates.json"};
    if (res.schrod_recovery) {
        manifest["schrod"]["p_succ"] = res.schrod_recovery->p_succ;
        manifest["schrod"]["xi_star"] = res.schrod_recovery->xi_star;
        manifest["schrod"]["norm_estimate"] = res.schrod_recovery->norm_estimate;
    }
    manifest["config_hash"] = fnv1a(c.resolved().dump());
    detail::write_text(fs::path(outdir) / "manifest.json", manifest.dump(2) + "\n");
    return outdir;
}

/** One sweep row: ladder value, measured error, the predicted exponent. */
struct SweepRow {
    double value;
    double error;
    double predicted_exponent;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepRow> rows;
    double fitted_slope = 0.0;
};

inline SweepResult sweep(const RunConfig& c, const std::string& axis,
                         const std::vector<double>& ladder, const std::string& out_override = "") {
    namespace fs = std::filesystem;
    if (ladder.size() < 3) throw ConfigError("sweep: need at least 3 ladder points");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (ladder[i] <= ladder[i - 1]) throw ConfigError("sweep: ladder must be strictly increasing");

    const std::string outdir = out_override.empty() ? c.output : out_override;
    fs::create_directories(outdir);
    ProblemSpec prob = build_problem(c);
    Grid grid = make_grid(c.dim, c.n_x);

    SweepResult result;
    result.axis = axis;

    if (axis == "nu") {
        OracleResult hl = hopf_lax(prob.initial, prob.kinetic, c.T, grid);
        for (double nu : ladder) {
            ProblemSpec p2(prob.kinetic, prob.potential, prob.initial, nu);
            Field S = solve_S(p2, grid, c.T,
                              IntegratorConfig{IntegratorConfig::Method::spectral_exact},
                              c.kinetic_kind == "half_quadratic" ? Pipeline::quadratic
                                                                 : Pipeline::general_empirical);
            result.rows.push_back({nu, max_abs_diff(S, hl.values), 0.5});
        }
    } else if (axis == "h") {
        IntegratorConfig icfg;
        Pipeline pipe = c.kinetic_kind == "half_quadratic" ? Pipeline::quadratic
                                                           : Pipeline::general_empirical;
        Field Sref = solve_S(prob, grid, c.T, icfg, pipe);
        for (double h : ladder) {
            SchemeParams params = SchemeParams::make(h, c.T, prob.nu);
            Trajectory traj = march(prob, params, grid);
            result.rows.push_back({h, max_abs_diff(traj.checkpoints.back().S, Sref), 1.0});
        }
    } else if (axis == "dx") {
        for (double nx_d : ladder) {
            int nx = static_cast<int>(nx_d);
            Grid g = make_grid(c.dim, nx);
            TransformConfig tc(prob.nu);
            Field u0 = colehopf_forward(prob.sample_initial(g), tc);
            LinearPdeCoefficients co = coefficients_quadratic(prob, g.dim);
            double ac = 0.0;
            if (!co.a_constant(ac)) throw ConfigError("sweep dx: needs constant coefficients");
            Field num = evolve(u0, co, c.T, IntegratorConfig{IntegratorConfig::Method::explicit_rk4});
            OracleResult ref = heat_exact(u0, ac, co.b, co.c, c.T);
            result.rows.push_back({1.0 / nx, max_abs_diff(num, ref.values), 2.0});
        }
    } else if (axis == "kappa") {
        TransformConfig tc(prob.nu);
        Field u = colehopf_forward(prob.sample_initial(grid), tc);
        const std::size_t a = grid.size() / 3;
        GradientResult target = gradient_from_u(u, 0, tc);
        for (double kappa : ladder) {
            EstimateReport rep = gradient_at_point(u, a, 0, prob.nu, kappa);
            result.rows.push_back({kappa, std::abs(rep.estimate - std::abs(target.grad[a])), 2.0});
        }
    } else if (axis == "shots") {
        TransformConfig tc(prob.nu);
        Field u = colehopf_forward(prob.sample_initial(grid), tc);
        const std::size_t a = grid.size() / 3;
        EstimateReport exact = value_at_point(u, a, prob.nu);
        const double nsq = norm_l2(u) * norm_l2(u);
        std::vector<long> lad(ladder.begin(), ladder.end());
        auto rows = shot_cost_curve(
            [&](const ShotPlan& plan) {
                return value_at_point(u, a, prob.nu, plan, NormChannel::exact_reference(nsq)).estimate;
            },
            exact.exact_value, lad, c.seed);
        for (const auto& r : rows)
            result.rows.push_back({static_cast<double>(r.shots), r.measured_std, -0.5});
    } else {
        throw ConfigError("sweep: axis must be one of nu, h, dx, kappa, shots");
    }

    std::vector<double> xs, ys;
    for (const auto& r : result.rows) {
        xs.push_back(r.value);
        ys.push_back(std::max(r.error, 1e-300));
    }
    result.fitted_slope = loglog_slope(xs, ys);

    std::ostringstream os;
    os << axis << ",error,predicted_exponent\n";
    for (const auto& r : result.rows)
        os << fmt_double(r.value) << "," << fmt_double(r.error) << ","
           << fmt_double(r.predicted_exponent) << "\n";
    detail::write_text(fs::path(outdir) / ("sweep_" + axis + ".csv"), os.str());

    json manifest = c.resolved();
    manifest["sweep"]["axis"] = axis;
    manifest["sweep"]["ladder"] = ladder;
    manifest["sweep"]["fitted_slope"] = result.fitted_slope;
    manifest["config_hash"] = fnv1a(c.resolved().dump());
    detail::write_text(fs::path(outdir) / "manifest.json", manifest.dump(2) + "\n");
    return result;
}

/** Run the designated oracle for the configured problem, with disk cache keyed
 *  by a content hash of (problem, grid, T). */
inline std::string run_oracle(const RunConfig& c, const std::string& kind,
                              const std::string& out_override = "") {
    namespace fs = std::filesystem;
    const std::string outdir = out_override.empty() ? c.output : out_override;
    fs::create_directories(outdir);
    ProblemSpec prob = build_problem(c);
    Grid grid = make_grid(c.dim, c.n_x);

    json key = c.resolved();
    key.erase("estimators");
    key.erase("shots");
    key.erase("seed");
    key.erase("output");
    key["oracle_kind"] = kind;
    const uint64_t hash = fnv1a(key.dump());
    fs::path cache_dir = fs::path(outdir) / "oracle_cache";
    fs::create_directories(cache_dir);
    fs::path cache_file = cache_dir / (std::to_string(hash) + ".bin");

    OracleResult res;
    bool cached = fs::exists(cache_file);
    if (cached) {
        res.values = load_binary_real(cache_file.string());
        res.method = kind + " (cached)";
    } else if (kind == "hopf_lax") {
        res = hopf_lax(prob.initial, prob.kinetic, c.T, grid);
    } else if (kind == "viscous") {
        res = viscous_hj_direct(prob, grid, c.T,
                                c.kinetic_kind == "half_quadratic"
                                    ? ViscousCoefficient::quadratic_nu
                                    : ViscousCoefficient::general_2anu);
    } else if (kind == "heat_exact") {
        TransformConfig tc(prob.nu);
        Field u0 = colehopf_forward(prob.sample_initial(grid), tc);
        LinearPdeCoefficients co = coefficients_quadratic(prob, grid.dim);
        double ac = 0.0;
        if (!co.a_constant(ac)) throw ConfigError("oracle heat_exact: needs constant coefficients");
        res = heat_exact(u0, ac, co.b, co.c, c.T);
    } else if (kind == "burgers") {
        if (c.dim != 1) throw ConfigError("oracle burgers: 1D only");
        Field S0 = prob.sample_initial(grid);
        Field R0 = apply_derivative(S0, 0);
        res = burgers_direct(R0, prob.potential.eval, prob.nu, c.T);
    } else {
        throw ConfigError("oracle: kind must be hopf_lax, viscous, heat_exact or burgers");
    }
    if (!cached) save_binary(res.values, cache_file.string());
    save_csv(res.values, outdir + "/oracle_" + kind + ".csv");

    json manifest;
    manifest["oracle"]["kind"] = kind;
    manifest["oracle"]["method"] = res.method;
    manifest["oracle"]["self_error"] = res.self_error;
    manifest["oracle"]["cache_hash"] = hash;
    manifest["oracle"]["cached"] = cached;
    manifest["config_hash"] = fnv1a(c.resolved().dump());
    detail::write_text(fs::path(outdir) / "manifest.json", manifest.dump(2) + "\n");
    return outdir;
}

/** Print a short human summary of a run directory's manifest. */
inline std::string report(const std::string& dir) {
    std::ifstream is(dir + "/manifest.json");
    if (!is) throw ConfigError("report: no manifest.json in " + dir);
    json m;
    is >> m;
    std::ostringstream os;
    os << "run directory: " << dir << "\n";
    if (m.contains("pipeline")) os << "pipeline: " << m["pipeline"].get<std::string>() << "\n";
    if (m.contains("config_hash")) os << "config hash: " << m["config_hash"] << "\n";
    if (m.contains("sweep")) {
        os << "sweep axis: " << m["sweep"]["axis"].get<std::string>()
           << ", fitted slope: " << m["sweep"]["fitted_slope"].get<double>() << "\n";
    }
    if (m.contains("oracle")) {
        os << "oracle: " << m["oracle"]["method"].get<std::string>()
           << ", self error: " << m["oracle"]["self_error"].get<double>() << "\n";
    }
    if (m.contains("schrod") && m["schrod"].contains("p_succ")) {
        os << "schrod p_succ: " << m["schrod"]["p_succ"].get<double>()
           << ", xi*: " << m["schrod"]["xi_star"].get<double>() << "\n";
    }
    if (m.contains("artifacts")) {
        os << "artifacts:";
        for (const auto& a : m["artifacts"]) os << " " << a.get<std::string>();
        os << "\n";
    }
    return os.str();
}

}  // namespace vhj
