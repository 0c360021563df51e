#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vhj/schrod.hpp"

using namespace vhj;

namespace {

LinearPdeCoefficients heat_coeffs(double nu, int d = 1) {
    LinearPdeCoefficients co;
    co.b = Vec::Zero(d);
    co.c = nu * Mat::Identity(d, d);
    return co;
}

LinearPdeCoefficients scalar_decay(double rate) {
    LinearPdeCoefficients co;
    co.a = [rate](const std::array<double, 3>&) { return rate; };
    co.b = Vec::Zero(1);
    co.c = Mat::Zero(1, 1);
    return co;
}

}  // namespace

TEST_CASE("assemble_A: diagonal decay, advection, heat spectrum") {
    Grid g = make_grid(1, 16);

    SplitOperator dec = assemble_A(scalar_decay(-1.0), g);
    REQUIRE((dec.A1.cwiseAbs().maxCoeff()) < 1e-14);
    REQUIRE((dec.A2 + MatC::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-14);

    LinearPdeCoefficients adv;
    adv.b = Vec::Constant(1, 0.7);
    adv.c = Mat::Zero(1, 1);
    SplitOperator a = assemble_A(adv, g);
    REQUIRE(a.A2.cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((a.A1 - a.A1.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(a.norm_A1 > 0.0);

    SplitOperator h = assemble_A(heat_coeffs(0.1), g);
    REQUIRE(h.A1.cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<MatC> es(h.A2);
    REQUIRE(es.eigenvalues().maxCoeff() <= 1e-12);  // A2 <= 0 for pure diffusion
    // spectrum matches the FFT symbol -4 nu sin^2(pi m / n) / dx^2
    const double dx = g.spacing();
    std::vector<double> symbol;
    for (int m = 0; m < g.n; ++m) {
        const double s = std::sin(M_PI * m / g.n);
        symbol.push_back(-4.0 * 0.1 * s * s / (dx * dx));
    }
    std::sort(symbol.begin(), symbol.end());
    for (int i = 0; i < g.n; ++i)
        REQUIRE_THAT(es.eigenvalues()[i], Catch::Matchers::WithinAbs(symbol[static_cast<std::size_t>(i)], 1e-8));
}

TEST_CASE("split parts are Hermitian and reconstruct A") {
    Grid g = make_grid(1, 12);
    LinearPdeCoefficients co;
    co.a = [](const std::array<double, 3>& x) { return 0.3 * std::cos(2 * M_PI * x[0]); };
    co.b = Vec::Constant(1, 0.2);
    co.c = 0.05 * Mat::Identity(1, 1);
    SplitOperator op = assemble_A(co, g);
    REQUIRE((op.A1 - op.A1.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((op.A2 - op.A2.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((op.A - (op.A1 + cplx(0, 1) * op.A2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ancilla grid validation and defaults") {
    AncillaGrid anc{4.0, 4.0, 64};
    REQUIRE_THROWS_AS((AncillaGrid{4.0, 4.0, 63}.validate(0.0, 1.0)), std::invalid_argument);
    REQUIRE_THROWS_AS((AncillaGrid{4.0, 2.0, 64}.validate(1.0, 1.0)), std::invalid_argument);
    anc.validate(0.0, 0.1);

    Grid g = make_grid(1, 4);
    SplitOperator dec = assemble_A(scalar_decay(-1.0), g);
    AncillaGrid def = AncillaGrid::defaults(dec, 1.0, 128);
    REQUIRE(def.L == 6.0);
    REQUIRE(def.R == 6.0);
    REQUIRE(def.N == 128);
}

TEST_CASE("zero dynamics leaves the state recoverable exactly") {
    Grid g = make_grid(1, 8);
    LinearPdeCoefficients co;
    co.b = Vec::Zero(1);
    co.c = Mat::Zero(1, 1);
    SplitOperator op = assemble_A(co, g);
    Field u0 = sample(g, [](const std::array<double, 3>& x) { return 1.0 + 0.3 * x[0]; });
    AncillaGrid anc{4.0, 4.0, 64};
    SchrodState st = schrod_evolve(u0, op, anc, 1.0);
    RecoveryResult rec = recover(st);
    for (std::size_t i = 0; i < g.size(); ++i)
        REQUIRE_THAT(rec.u[i].real(), Catch::Matchers::WithinAbs(u0[i], 1e-11));
    REQUIRE_THAT(rec.norm_estimate, Catch::Matchers::WithinRel(norm_l2(u0), 1e-12));
    REQUIRE_THAT(rec.p_succ, Catch::Matchers::WithinRel(rec.tail_mass, 1e-12));
}

TEST_CASE("scalar decay is recovered through the ancilla") {
    Grid g = make_grid(1, 4);
    SplitOperator op = assemble_A(scalar_decay(-1.0), g);
    Field u0(g, 1.0);
    AncillaGrid anc = AncillaGrid::defaults(op, 1.0, 128);
    SchrodState st = schrod_evolve(u0, op, anc, 1.0);
    RecoveryResult rec = recover(st);
    const double expect = std::exp(-1.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        REQUIRE_THAT(std::abs(rec.u[i]), Catch::Matchers::WithinRel(expect, 1e-3));
    REQUIRE_THAT(rec.norm_estimate / norm_l2(u0), Catch::Matchers::WithinRel(expect, 1e-3));
}

TEST_CASE("extended dynamics conserves the statevector norm") {
    Grid g = make_grid(1, 16);
    LinearPdeCoefficients co;
    co.a = [](const std::array<double, 3>& x) { return -0.5 + 0.2 * std::sin(2 * M_PI * x[0]); };
    co.b = Vec::Constant(1, 0.3);
    co.c = 0.02 * Mat::Identity(1, 1);
    SplitOperator op = assemble_A(co, g);
    Field u0 = sample(g, [](const std::array<double, 3>& x) { return std::cos(2 * M_PI * x[0]) + 1.2; });
    AncillaGrid anc = AncillaGrid::defaults(op, 0.2, 64);
    SchrodState st0 = schrod_evolve(u0, op, anc, 0.0);
    SchrodState st1 = schrod_evolve(u0, op, anc, 0.2);
    REQUIRE_THAT(state_norm(st1), Catch::Matchers::WithinRel(state_norm(st0), 1e-10));
}

TEST_CASE("block-diagonal evolution equals the full extended Hamiltonian") {
    Grid g = make_grid(1, 8);
    LinearPdeCoefficients co;
    co.a = [](const std::array<double, 3>& x) { return -0.4 + 0.1 * std::cos(2 * M_PI * x[0]); };
    co.b = Vec::Constant(1, 0.15);
    co.c = 0.03 * Mat::Identity(1, 1);
    SplitOperator op = assemble_A(co, g);
    Field u0 = sample(g, [](const std::array<double, 3>& x) { return 1.0 + 0.5 * std::sin(2 * M_PI * x[0]); });
    AncillaGrid anc{4.0, 4.0, 16};  // N_xi * n_x = 128 <= 512
    const double T = 0.3;
    SchrodState st = schrod_evolve(u0, op, anc, T);

    // full H = A2 (x) diag(eta) + A1 (x) I on the eta-representation
    const int N = anc.N;
    const long nx = static_cast<long>(g.size());
    MatC H = MatC::Zero(N * nx, N * nx);
    for (int m = 0; m < N; ++m)
        H.block(m * nx, m * nx, nx, nx) = anc.eta(m) * op.A2 + op.A1;
    Eigen::SelfAdjointEigenSolver<MatC> es(H);
    VecC v0 = VecC::Zero(N * nx);
    const std::vector<double> profd = anc.profile();
    std::vector<cplx> prof(profd.begin(), profd.end());
    Grid line{1, N};
    fft_inplace(line, prof, FFTW_FORWARD);
    for (int m = 0; m < N; ++m)
        for (long j = 0; j < nx; ++j) v0[m * nx + j] = prof[static_cast<std::size_t>(m)] * u0[static_cast<std::size_t>(j)];
    VecC phases(es.eigenvalues().size());
    for (long k = 0; k < phases.size(); ++k) phases[k] = std::polar(1.0, -es.eigenvalues()[k] * T);
    VecC vT = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * v0));

    double worst = 0.0;
    for (int m = 0; m < N; ++m)
        for (long j = 0; j < nx; ++j)
            worst = std::max(worst, std::abs(vT[m * nx + j] - st.blocks(m, j)));
    REQUIRE(worst < 1e-10);
}

TEST_CASE("heat recovery matches the direct discrete evolution") {
    Grid g = make_grid(1, 64);
    SplitOperator op = assemble_A(heat_coeffs(0.1), g);
    Field u0 = sample(g, [](const std::array<double, 3>& x) { return std::cos(2 * M_PI * x[0]); });
    AncillaGrid anc = AncillaGrid::defaults(op, 0.1, 64);
    REQUIRE_THAT(anc.L, Catch::Matchers::WithinAbs(4.0, 1e-9));  // lambda_max ~ 0 up to eigensolver eps
    SchrodState st = schrod_evolve(u0, op, anc, 0.1);
    RecoveryResult rec = recover(st);

    // reference: exp of the same discrete generator
    Eigen::MatrixXd M = (cplx(0, -1) * op.A).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esM(M);
    Eigen::VectorXd u0v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u0v[static_cast<long>(i)] = u0[i];
    Eigen::VectorXd ref = esM.eigenvectors() *
                          (esM.eigenvalues().array() * 0.1).exp().matrix().asDiagonal() *
                          (esM.eigenvectors().transpose() * u0v);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        num += std::norm(rec.u[i] - ref[static_cast<long>(i)]);
        den += ref[static_cast<long>(i)] * ref[static_cast<long>(i)];
    }
    REQUIRE(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("positive lambda_max branch shifts the recovery slice") {
    Grid g = make_grid(1, 4);
    // diagonal growth/decay mix via a(x): a takes values {+0.5, -0.3, 0, 0}
    LinearPdeCoefficients co;
    co.a = [](const std::array<double, 3>& x) {
        if (std::abs(x[0] + 0.5) < 1e-9) return 0.5;
        if (std::abs(x[0] + 0.25) < 1e-9) return -0.3;
        return 0.0;
    };
    co.b = Vec::Zero(1);
    co.c = Mat::Zero(1, 1);
    SplitOperator op = assemble_A(co, g);
    REQUIRE_THAT(op.lambda_max_A2, Catch::Matchers::WithinAbs(0.5, 1e-12));
    Field u0(g, 1.0);
    AncillaGrid anc = AncillaGrid::defaults(op, 1.0, 256);
    REQUIRE_THAT(anc.L, Catch::Matchers::WithinAbs(5.0, 1e-9));
    SchrodState st = schrod_evolve(u0, op, anc, 1.0);
    RecoveryResult rec = recover(st);
    REQUIRE(rec.xi_star > 0.5);
    REQUIRE_THAT(std::abs(rec.u[0]), Catch::Matchers::WithinRel(std::exp(0.5), 1e-3));
    REQUIRE_THAT(std::abs(rec.u[1]), Catch::Matchers::WithinRel(std::exp(-0.3), 1e-3));
}

TEST_CASE("slice independence above xi*") {
    Grid g = make_grid(1, 64);
    SplitOperator op = assemble_A(heat_coeffs(0.1), g);
    Field u0 = sample(g, [](const std::array<double, 3>& x) { return std::cos(2 * M_PI * x[0]); });
    AncillaGrid anc = AncillaGrid::defaults(op, 0.1, 64);
    SchrodState st = schrod_evolve(u0, op, anc, 0.1);
    RecoveryResult rec = recover(st);
    for (int extra = 1; extra <= 3; ++extra) {
        ComplexField s = slice_at(st, rec.xi_star_index + extra);
        REQUIRE(rel_l2_diff(s, rec.u) < 1e-3);
    }
}

TEST_CASE("p_succ is monotone non-increasing in the cut") {
    Grid g = make_grid(1, 16);
    SplitOperator op = assemble_A(heat_coeffs(0.05), g);
    Field u0 = sample(g, [](const std::array<double, 3>& x) { return 1.0 + std::cos(2 * M_PI * x[0]); });
    AncillaGrid anc{4.0, 4.0, 32};
    SchrodState st = schrod_evolve(u0, op, anc, 0.05);
    double prev = 1.0;
    for (int cut = 0; cut < anc.N - 1; ++cut) {
        const double p = p_succ_at(st, cut);
        REQUIRE(p <= prev + 1e-15);
        prev = p;
    }
}

TEST_CASE("recovery fails cleanly when the window is too small") {
    Grid g = make_grid(1, 4);
    LinearPdeCoefficients co = scalar_decay(3.0);  // growth rate +3
    SplitOperator op = assemble_A(co, g);
    Field u0(g, 1.0);
    AncillaGrid anc{6.0, 6.0, 64};
    // validate() must reject: R = 6 <= lambda_max*T + 3 = 3+3 at T = 1... use T = 1.5
    REQUIRE_THROWS_AS(schrod_evolve(u0, op, anc, 1.5), std::invalid_argument);
}

TEST_CASE("query complexity calculators reproduce hand arithmetic") {
    OperatorNorms ng = operator_norms_from_grid(2, 64);
    REQUIRE(ng.A1 == 128.0);
    REQUIRE(ng.A2 == 8192.0);

    // mode mu values
    const double q_opt = query_complexity(1.0, 1.0, 1.0, 0.01, 1.0, AncillaMode::optimal);
    const double mu = std::log(100.0);
    REQUIRE_THAT(mu, Catch::Matchers::WithinAbs(4.605, 1e-3));
    REQUIRE_THAT(q_opt, Catch::Matchers::WithinRel(mu + std::log(mu / 0.01), 1e-12));

    // halving ||u|| at least doubles the count
    const double base = query_complexity(10.0, 50.0, 1.0, 0.1, 1.0, AncillaMode::first_order);
    const double half = query_complexity(10.0, 50.0, 1.0, 0.1, 0.5, AncillaMode::first_order);
    REQUIRE(half >= 2.0 * base);

    OperatorNorms nv = operator_norms_value(2, 0.01);
    REQUIRE_THAT(nv.A1, Catch::Matchers::WithinRel(std::pow(2.0, 1.5) / 0.1, 1e-12));
    REQUIRE_THAT(nv.A2, Catch::Matchers::WithinRel(400.0, 1e-12));
    OperatorNorms ngr = operator_norms_gradient(2, 0.01);
    REQUIRE_THAT(ngr.A1, Catch::Matchers::WithinRel(std::pow(2.0, 2.5) / 0.01, 1e-12));
    REQUIRE_THAT(ngr.A2, Catch::Matchers::WithinRel(16.0 / 1e-4, 1e-12));

    REQUIRE_THAT(cost_heat_first_order(2, 0.1, 0.01, 1.5, 2.0, 0.5),
                 Catch::Matchers::WithinRel(2 * (0.1 * 2 / 0.01 + 1.5 / 0.1) * 2.0 / 0.1 / 0.5, 1e-12));
    REQUIRE_THAT(cost_general_clock(2, 0.3, 0.05, 0.01, 2.0, 0.5),
                 Catch::Matchers::WithinRel(8.0 * 2.0 * (0.3 + 0.05 * 2 / 0.01) / 0.1 / 0.5, 1e-12));
}
