#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fracmfg/errors.hpp"
#include "fracmfg/fpsolver.hpp"
#include "oracles/oracles.hpp"

using namespace fracmfg;

namespace {

constexpr double kPi = std::numbers::pi;

GridField wave_drift(const TimeGrid& tg, const SpaceGrid& sg, double amp) {
    GridField b(tg, sg);
    for (std::size_t n = 0; n < b.n_time(); ++n)
        for (std::size_t i = 0; i < sg.n_cells; ++i) b(n, i) = amp * std::sin(2 * kPi * sg.center(i) + 2 * tg.t(n));
    return b;
}

double mode_error(std::size_t Nt) {
    const double beta = 0.6, nu = 0.05, eps = 0.2, lam = nu * 4 * kPi * kPi;
    SpaceGrid sg(0.0, 1.0, 256);
    TimeGrid tg(1.0, Nt);
    std::vector<double> m0(sg.n_cells);
    for (std::size_t i = 0; i < m0.size(); ++i) m0[i] = 1.0 + eps * std::cos(2 * kPi * sg.center(i));
    auto d = solve_fp(m0, GridField(tg, sg), nu, beta);
    double e = 0;
    for (std::size_t n = 1; n <= Nt; ++n) {
        double amp = 0;
        for (std::size_t i = 0; i < sg.n_cells; ++i) amp += 2.0 * d.m(n, i) * std::cos(2 * kPi * sg.center(i)) / sg.n_cells;
        double ex = eps * oracle::mittag_leffler(beta, 1.0, -lam * std::pow(tg.t(n), beta));
        e = std::max(e, std::abs(amp / ex - 1.0));
    }
    return e;
}

}  // namespace

TEST_CASE("generator has zero column sums and a nonnegative off-diagonal") {
    SpaceGrid sg(0.0, 2.0, 40);
    std::mt19937_64 eng(2);
    std::uniform_real_distribution<double> U(-3, 3);
    std::vector<double> b(sg.n_cells);
    for (auto& x : b) x = U(eng);
    auto A = assemble_generator(b, 0.1, sg);
    CHECK(A.max_abs_column_sum() <= 1e-12);
    for (std::size_t i = 0; i < sg.n_cells; ++i) {
        CHECK(A.lower[i] >= 0.0);
        CHECK(A.upper[i] >= 0.0);
        CHECK(A.diag[i] <= 0.0);
    }
    std::vector<double> phi(sg.n_cells), psi(sg.n_cells);
    for (std::size_t i = 0; i < sg.n_cells; ++i) {
        phi[i] = U(eng);
        psi[i] = U(eng);
    }
    auto Ap = A.apply(phi);
    auto Atp = A.transpose().apply(psi);
    double a = 0, c = 0;
    for (std::size_t i = 0; i < sg.n_cells; ++i) {
        a += Ap[i] * psi[i];
        c += phi[i] * Atp[i];
    }
    CHECK(a == doctest::Approx(c).epsilon(1e-12));
    // the transpose annihilates constants: A^T 1 = 0 is mass conservation
    for (double x : A.transpose().apply(std::vector<double>(sg.n_cells, 1.0))) CHECK(std::abs(x) <= 1e-10);

    b[3] = std::nan("");
    CHECK_THROWS_AS(assemble_generator(b, 0.1, sg), ParameterError);
}

TEST_CASE("mass is conserved to round-off and positivity holds") {
    SpaceGrid sg(0.0, 1.0, 128);
    TimeGrid tg(1.0, 400);
    for (double beta : {0.3, 0.7, 1.0}) {
        auto d = solve_fp(gaussian_density(sg, 0.2, 0.05), wave_drift(tg, sg, 1.5), 0.02, beta);
        CHECK(d.max_step_mass_drift <= 1e-12);
        CHECK(d.min_value >= 0.0);
        CHECK_FALSE(d.clipped);
        for (std::size_t n = 0; n < d.m.n_time(); n += 50) CHECK(slice_mass(d.m.row(n), sg.dx()) == doctest::Approx(1.0));
    }
}

TEST_CASE("single Fourier mode decays like the Mittag-Leffler function") {
    double e200 = mode_error(200), e400 = mode_error(400);
    CHECK(e200 <= 2e-2);
    CHECK(e200 / e400 >= 1.8);
}

TEST_CASE("beta = 1 reduces to implicit Euler") {
    SpaceGrid sg(0.0, 1.0, 64);
    TimeGrid tg(0.5, 80);
    auto b = wave_drift(tg, sg, 0.9);
    oracle::Rows rows(tg.n_nodes());
    for (std::size_t n = 0; n < tg.n_nodes(); ++n) rows[n].assign(b.row(n).begin(), b.row(n).end());
    auto m0 = gaussian_density(sg, 0.6, 0.1);
    auto d = solve_fp(m0, b, 0.03, 1.0);
    auto ref = oracle::classical_fp(m0, rows, 0.03, 1.0, 0.5);
    for (std::size_t n = 0; n < tg.n_nodes(); ++n)
        for (std::size_t i = 0; i < sg.n_cells; ++i) CHECK(std::abs(d.m(n, i) - ref[n][i]) <= 1e-13);
}

TEST_CASE("the ill-posed variant does not conserve mass") {
    SpaceGrid sg(0.0, 1.0, 64);
    TimeGrid tg(1.0, 100);
    FpOptions opt;
    opt.ill_posed_variant = true;
    auto d = solve_fp(gaussian_density(sg, 0.5, 0.1), GridField(tg, sg), 0.05, 0.6, opt);
    CHECK(d.max_step_mass_drift > 1e-6);
}

TEST_CASE("weak form residual vanishes under refinement") {
    TestFunction tf{[](double t, double x) { return (1 + t) * std::cos(2 * kPi * x); },
                    [](double t, double x) { return -(1 + t) * 2 * kPi * std::sin(2 * kPi * x); },
                    [](double t, double x) { return -(1 + t) * 4 * kPi * kPi * std::cos(2 * kPi * x); }};
    // upwind drift fluxes make the residual first order; with no drift only the
    // central diffusion is left and it is second order
    for (double amp : {0.8, 0.0}) {
        double r[3];
        for (int k = 0; k < 3; ++k) {
            SpaceGrid sg(0.0, 1.0, 64u << k);
            TimeGrid tg(1.0, 50u << k);
            auto b = wave_drift(tg, sg, amp);
            auto d = solve_fp(gaussian_density(sg, 0.3, 0.1), b, 0.05, 0.7);
            r[k] = check_weak_form(d.m, b, 0.05, 0.7, tf);
        }
        double order = amp > 0.0 ? 1.0 : 2.0;
        for (int k = 0; k < 2; ++k) CHECK(std::abs(std::log2(r[k] / r[k + 1]) - order) < 0.1);
        CHECK(r[0] < (amp > 0.0 ? 0.12 : 3e-4));
    }
}

TEST_CASE("input validation") {
    SpaceGrid sg(0.0, 1.0, 16);
    TimeGrid tg(1.0, 10);
    std::vector<double> m(16, 0.5);
    CHECK_THROWS_AS(solve_fp(m, GridField(tg, sg), 0.1, 0.5), ParameterError);
    m.assign(16, 1.0);
    m[0] = -0.1;
    m[1] = 1.1;
    CHECK_THROWS_AS(solve_fp(m, GridField(tg, sg), 0.1, 0.5), ParameterError);
    CHECK_THROWS_AS(solve_fp(gaussian_density(sg, 0.5, 0.1), GridField(tg, sg), 0.1, 1.5), ParameterError);
    CHECK_THROWS_AS(SpaceGrid(0.0, 1.0, 4), ParameterError);
}

TEST_CASE("wrapped Gaussian density") {
    SpaceGrid sg(-1.0, 1.0, 50);
    auto g = gaussian_density(sg, 0.95, 0.2);
    CHECK(slice_mass(g, sg.dx()) == doctest::Approx(1.0).epsilon(1e-14));
    // mass wraps across the seam
    CHECK(g.front() > g[25]);
}
