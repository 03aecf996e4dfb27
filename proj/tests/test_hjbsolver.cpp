#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fracmfg/errors.hpp"
#include "fracmfg/fracops.hpp"
#include "fracmfg/hjbsolver.hpp"
#include "oracles/oracles.hpp"

using namespace fracmfg;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> cos_mode(const SpaceGrid& sg, double a) {
    std::vector<double> f(sg.n_cells);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = a * std::cos(2 * kPi * sg.center(i));
    return f;
}

double amplitude(std::span<const double> row, const SpaceGrid& sg) {
    double s = 0;
    for (std::size_t i = 0; i < row.size(); ++i) s += 2.0 * row[i] * std::cos(2 * kPi * sg.center(i)) / row.size();
    return s;
}

GridField constant_rows(const TimeGrid& tg, const SpaceGrid& sg, const std::vector<double>& r) {
    GridField f(tg, sg);
    for (std::size_t n = 0; n < f.n_time(); ++n) std::copy(r.begin(), r.end(), f.row(n).begin());
    return f;
}

// G with some structure in t and x
GridField wavy_source(const TimeGrid& tg, const SpaceGrid& sg) {
    GridField G(tg, sg);
    for (std::size_t n = 0; n < G.n_time(); ++n)
        for (std::size_t i = 0; i < sg.n_cells; ++i)
            G(n, i) = 0.8 * std::exp(-std::pow(sg.center(i) - 0.4, 2) / 0.02) * (1.0 + 0.5 * std::sin(3 * tg.t(n)));
    return G;
}

double linear_error(std::size_t Nt, bool mild) {
    const double beta = 0.6, nu = 0.05, lam = nu * 4 * kPi * kPi, a = 0.4, l = 0.5;
    SpaceGrid sg(0.0, 1.0, 128);
    TimeGrid tg(1.0, Nt);
    auto g = cos_mode(sg, a);
    auto src = constant_rows(tg, sg, cos_mode(sg, l));
    auto vf = mild ? mild_solution_linear(g, src, nu, beta) : solve_hjb(g, src, nu, beta, HamiltonianSpec::zero());
    double e = 0;
    for (std::size_t n = 0; n < Nt; ++n) {
        double E = oracle::mittag_leffler(beta, 1.0, -lam * std::pow(1.0 - tg.t(n), beta));
        double ex = a * E + l * (1 - E) / lam;
        e = std::max(e, std::abs(amplitude(vf.v.row(n), sg) / ex - 1.0));
    }
    return e;
}

}  // namespace

TEST_CASE("truncated quadratic Hamiltonian and its derivative") {
    auto h = HamiltonianSpec::truncated_quadratic(2.0);
    CHECK(h.H(0, 0, 1.0) == doctest::Approx(0.5));
    CHECK(h.H(0, 0, -3.0) == doctest::Approx(2.0 * 3.0 - 2.0));
    CHECK(h.dH(0, 0, 1.5) == doctest::Approx(1.5));
    CHECK(h.dH(0, 0, 7.0) == doctest::Approx(2.0));
    CHECK(h.dH(0, 0, -7.0) == doctest::Approx(-2.0));
    CHECK_NOTHROW(validate_hamiltonian(h, 1.0, 0.0, 1.0));
    CHECK_THROWS_AS(HamiltonianSpec::truncated_quadratic(0.0), ParameterError);
}

TEST_CASE("Hamiltonian validation rejects nonconvex or fast-growing H") {
    auto concave = HamiltonianSpec::custom([](double, double, double p) { return -p * p; },
                                           [](double, double, double p) { return -2 * p; }, 10.0);
    CHECK_THROWS_AS(validate_hamiltonian(concave, 1.0, 0.0, 1.0), ParameterError);
    auto steep = HamiltonianSpec::custom([](double, double, double p) { return p * p; },
                                         [](double, double, double p) { return 2 * p; }, 1.0);
    CHECK_THROWS_AS(validate_hamiltonian(steep, 1.0, 0.0, 1.0), ParameterError);
}

TEST_CASE("linear problem follows the Mittag-Leffler mode and improves with N_t") {
    double e1 = linear_error(100, false), e2 = linear_error(200, false);
    CHECK(e1 <= 2e-2);
    CHECK(e2 < e1);
}

TEST_CASE("spectral mild solution agrees with the oracle") {
    CHECK(linear_error(50, true) <= 1e-8);
}

TEST_CASE("beta = 1 reproduces the classical implicit Euler solver") {
    SpaceGrid sg(0.0, 1.0, 40);
    TimeGrid tg(0.5, 50);
    auto g = cos_mode(sg, 0.3);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 0.1 * std::sin(4 * kPi * sg.center(i));
    auto G = wavy_source(tg, sg);
    auto vf = solve_hjb(g, G, 0.05, 1.0, HamiltonianSpec::truncated_quadratic(1.0), {.inner_tol = 1e-14});
    oracle::Rows Gr;
    for (std::size_t n = 0; n < G.n_time(); ++n) Gr.emplace_back(G.row(n).begin(), G.row(n).end());
    auto ref = oracle::classical_hjb(g, Gr, 0.05, 1.0, 1.0, 0.5);
    double d = 0;
    for (std::size_t n = 0; n < G.n_time(); ++n)
        for (std::size_t i = 0; i < sg.n_cells; ++i) d = std::max(d, std::abs(vf.v(n, i) - ref[n][i]));
    CHECK(d <= 1e-12);
}

TEST_CASE("computed solution satisfies the discrete equation it was marched with") {
    SpaceGrid sg(0.0, 1.0, 64);
    TimeGrid tg(1.0, 80);
    auto g = cos_mode(sg, 0.2);
    auto G = wavy_source(tg, sg);
    auto ham = HamiltonianSpec::truncated_quadratic(5.0);
    auto vf = solve_hjb(g, G, 0.05, 0.7, ham);
    CHECK(rl_form_residual(vf, G, 0.05, 0.7, ham) <= 1e-8);
    CHECK(vf.max_inner_iterations < 50);
}

TEST_CASE("Caputo form: first order away from the terminal layer, stalled next to it") {
    SpaceGrid sg(0.0, 1.0, 64);
    auto ham = HamiltonianSpec::truncated_quadratic(5.0);
    double inner[2], full[2];
    for (int k = 0; k < 2; ++k) {
        TimeGrid tg(1.0, 100u << k);
        auto G = wavy_source(tg, sg);
        auto vf = solve_hjb(cos_mode(sg, 0.2), G, 0.05, 0.7, ham);
        inner[k] = caputo_form_residual(vf, G, 0.05, 0.7, ham, 0.25);
        full[k] = caputo_form_residual(vf, G, 0.05, 0.7, ham);
    }
    CHECK(inner[0] / inner[1] >= 1.7);
    // next to T the stencil pair misses by 1/(Gamma(1+beta) Gamma(2-beta)) - 1 of F, for any dt
    const double gap = 1.0 / (std::tgamma(1.7) * std::tgamma(1.3)) - 1.0;
    CHECK(full[1] == doctest::Approx(full[0]).epsilon(0.05));
    CHECK(full[1] <= gap * 1.05);
    CHECK_THROWS_AS(caputo_form_residual(solve_hjb(cos_mode(sg, 0.2), wavy_source(TimeGrid(1.0, 10), sg), 0.05, 0.7,
                                                   ham),
                                         wavy_source(TimeGrid(1.0, 10), sg), 0.05, 0.7, ham, 1.0),
                    ParameterError);
}

TEST_CASE("comparison: a larger terminal cost gives a larger value") {
    SpaceGrid sg(0.0, 1.0, 64);
    TimeGrid tg(1.0, 60);
    auto g = cos_mode(sg, 0.2);
    auto g2 = g;
    for (std::size_t i = 0; i < g2.size(); ++i) g2[i] += 0.3 * std::exp(-std::pow(sg.center(i) - 0.7, 2) / 0.01);
    auto G = wavy_source(tg, sg);
    auto ham = HamiltonianSpec::truncated_quadratic(2.0);
    auto a = solve_hjb(g, G, 0.05, 0.6, ham);
    auto b = solve_hjb(g2, G, 0.05, 0.6, ham);
    double worst = 0;
    for (std::size_t k = 0; k < a.v.data().size(); ++k) worst = std::min(worst, b.v.data()[k] - a.v.data()[k]);
    CHECK(worst >= -1e-12);
}

TEST_CASE("standard-time running cost is exactly the integrated source") {
    SpaceGrid sg(0.0, 1.0, 48);
    TimeGrid tg(1.0, 60);
    const double beta = 0.65;
    auto g = cos_mode(sg, 0.2);
    auto G = wavy_source(tg, sg);
    auto ham = HamiltonianSpec::truncated_quadratic(3.0);
    HjbOptions o;
    o.standard_time_source = true;
    auto a = solve_hjb(g, G, 0.05, beta, ham, o);
    auto I = build_stencil(beta, StencilKind::rl_integral, Direction::backward, tg.n_nodes(), tg.dt(),
                           Scheme::product_rectangle);
    GridField IG(tg, sg);
    std::vector<double> col(tg.n_nodes());
    for (std::size_t i = 0; i < sg.n_cells; ++i) {
        for (std::size_t n = 0; n < col.size(); ++n) col[n] = G(n, i);
        auto c = apply_backward(I, col);
        for (std::size_t n = 0; n < col.size(); ++n) IG(n, i) = c[n];
    }
    auto b = solve_hjb(g, IG, 0.05, beta, ham);
    CHECK(max_abs_diff(a.v, b.v) <= 1e-14);
    CHECK(max_abs_diff(a.v, solve_hjb(g, G, 0.05, beta, ham).v) > 1e-3);
}

TEST_CASE("Newton failure surfaces as a numerical error") {
    SpaceGrid sg(0.0, 1.0, 64);
    TimeGrid tg(1.0, 20);
    HjbOptions o;
    o.max_inner = 1;
    o.inner_tol = 1e-15;
    CHECK_THROWS_AS(solve_hjb(cos_mode(sg, 2.0), wavy_source(tg, sg), 0.05, 0.7,
                              HamiltonianSpec::truncated_quadratic(5.0), o),
                    NumericalError);
}

TEST_CASE("input validation") {
    SpaceGrid sg(0.0, 1.0, 16);
    TimeGrid tg(1.0, 10);
    auto ham = HamiltonianSpec::truncated_quadratic();
    GridField G(tg, sg);
    CHECK_THROWS_AS(solve_hjb(cos_mode(sg, 1), G, 0.05, 1.2, ham), ParameterError);
    CHECK_THROWS_AS(solve_hjb(cos_mode(sg, 1), G, 0.0, 0.7, ham), ParameterError);
    CHECK_THROWS_AS(solve_hjb(std::vector<double>(15, 0.0), G, 0.05, 0.7, ham), ParameterError);
    auto bad = cos_mode(sg, 1);
    bad[3] = std::nan("");
    CHECK_THROWS_AS(solve_hjb(bad, G, 0.05, 0.7, ham), ParameterError);
}

TEST_CASE("periodic linear interpolation") {
    SpaceGrid sg(0.0, 2.0, 8);
    GridField f(TimeGrid(1.0, 1), sg);
    double vals[] = {1, 2, 3, 4, 5, 6, 7, 8};
    std::copy(vals, vals + 8, f.row(0).begin());
    CHECK(interpolate(f, 0, 0.125) == doctest::Approx(1.0));
    CHECK(interpolate(f, 0, 0.25) == doctest::Approx(1.5));
    CHECK(interpolate(f, 0, 0.0) == doctest::Approx(4.5));
    CHECK(interpolate(f, 0, 2.0) == doctest::Approx(4.5));
    CHECK(interpolate(f, 0, -1.875) == doctest::Approx(1.0));
}

TEST_CASE("Monte Carlo: zero dynamics and unit running cost give the clock's mean") {
    ControlProblem prob;
    prob.time = TimeGrid(1.0, 40);
    prob.space = SpaceGrid(0.0, 1.0, 16);
    prob.nu = 0.0;
    prob.beta = 0.6;
    prob.terminal.assign(16, 0.0);
    prob.running_cost = [](double, double, double) { return 1.0; };
    auto est = estimate_value_mc(constant_policy(0.0), 0, 0.5, 20000, 11, prob);
    double exact = 1.0 / std::tgamma(1.6);
    CHECK(std::abs(est.estimate - exact) <= 4 * est.std_error + 0.02 * exact);
}

TEST_CASE("Monte Carlo: uncontrolled diffusion of a cosine payoff") {
    ControlProblem prob;
    prob.time = TimeGrid(1.0, 40);
    prob.space = SpaceGrid(0.0, 1.0, 256);
    prob.nu = 0.05;
    prob.beta = 0.5;
    prob.terminal = cos_mode(prob.space, 1.0);
    const double lam = prob.nu * 4 * kPi * kPi;
    double exact = oracle::mittag_leffler(0.5, 1.0, -lam) * std::cos(2 * kPi * 0.1);
    McOptions start, term;
    term.anchor = ClockAnchor::terminal;
    auto a = estimate_value_mc(constant_policy(0.0), 0, 0.1, 20000, 3, prob, start);
    auto b = estimate_value_mc(constant_policy(0.0), 0, 0.1, 20000, 3, prob, term);
    // grid interpolation of the payoff costs about (dx)^2 relative
    CHECK(std::abs(a.estimate - exact) <= 4 * a.std_error + 1e-3);
    CHECK(std::abs(b.estimate - exact) <= 4 * b.std_error + 1e-3);
}

TEST_CASE("Monte Carlo inputs are validated") {
    ControlProblem prob;
    prob.time = TimeGrid(1.0, 10);
    prob.space = SpaceGrid(0.0, 1.0, 8);
    prob.nu = 0.05;
    prob.beta = 0.7;
    prob.terminal.assign(8, 0.0);
    CHECK_THROWS_AS(estimate_value_mc(constant_policy(0.0), 0, 0.5, 1, 1, prob), ParameterError);
    CHECK_THROWS_AS(estimate_value_mc(constant_policy(0.0), 11, 0.5, 10, 1, prob), ParameterError);
    McOptions o;
    o.substeps = 0;
    CHECK_THROWS_AS(estimate_value_mc(constant_policy(0.0), 0, 0.5, 10, 1, prob, o), ParameterError);
    prob.terminal.assign(7, 0.0);
    CHECK_THROWS_AS(estimate_value_mc(constant_policy(0.0), 0, 0.5, 10, 1, prob), ParameterError);
}

TEST_CASE("dynamic programming: exact for beta = 1, a memory gap for beta < 1") {
    // Uncontrolled cosine payoff: v(t) = E_beta(-lam (T-t)^beta) cos, while restarting the clock at theta
    // gives E_beta(-lam theta^beta) E_beta(-lam (T-theta)^beta) cos.
    const double nu = 0.05, lam = nu * 4 * kPi * kPi;
    for (double beta : {1.0, 0.5}) {
        ControlProblem prob;
        prob.time = TimeGrid(1.0, 100);
        prob.space = SpaceGrid(0.0, 1.0, 128);
        prob.nu = nu;
        prob.beta = beta;
        prob.terminal = cos_mode(prob.space, 1.0);
        auto vf = solve_hjb(prob.terminal, GridField(prob.time, prob.space), nu, beta, HamiltonianSpec::zero());
        auto r = dpp_residual(vf, 0, 0.0, 50, 20000, 21, prob);
        double ET = oracle::mittag_leffler(beta, 1.0, -lam);
        double Eh = oracle::mittag_leffler(beta, 1.0, -lam * std::pow(0.5, beta));
        double gap = std::abs(ET - Eh * Eh);
        double pde = std::abs(r.value - ET);
        CAPTURE(beta);
        CAPTURE(r.residual);
        CAPTURE(gap);
        CHECK(std::abs(r.residual - gap) <= 4 * r.std_error + 2 * pde + 2e-3);
        if (beta == 1.0) CHECK(gap <= 1e-12);
        else CHECK(gap >= 0.1);
    }
}
