#include "fracmfg/fpsolver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fracmfg/errors.hpp"
#include "fracmfg/fracops.hpp"
#include "linalg.hpp"

namespace fracmfg {

std::vector<double> GeneratorMatrix::apply(std::span<const double> phi) const {
    const std::size_t n = size();
    require(phi.size() == n, "generator size mismatch");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;
        out[i] = lower[i] * phi[im] + diag[i] * phi[i] + upper[i] * phi[ip];
    }
    return out;
}

GeneratorMatrix GeneratorMatrix::transpose() const {
    const std::size_t n = size();
    GeneratorMatrix t;
    t.diag = diag;
    t.lower.resize(n);
    t.upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.lower[i] = upper[(i + n - 1) % n];
        t.upper[i] = lower[(i + 1) % n];
    }
    return t;
}

double GeneratorMatrix::max_abs_column_sum() const {
    const std::size_t n = size();
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double s = diag[j] + lower[(j + 1) % n] + upper[(j + n - 1) % n];
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

GeneratorMatrix assemble_generator(std::span<const double> drift, double nu, const SpaceGrid& grid) {
    const std::size_t n = grid.n_cells;
    require(drift.size() == n, "drift has the wrong number of cells");
    require(std::isfinite(nu) && nu >= 0.0, "nu must be nonnegative");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(drift[i])) throw ParameterError("non-finite drift at cell " + std::to_string(i));
    const double dx = grid.dx();
    const double d = nu / dx;
    // face i+1/2 sits between cells i and i+1
    std::vector<double> bp(n), bm(n);
    for (std::size_t i = 0; i < n; ++i) {
        double b = 0.5 * (drift[i] + drift[(i + 1) % n]);
        bp[i] = std::max(b, 0.0);
        bm[i] = std::max(-b, 0.0);
    }
    GeneratorMatrix A;
    A.lower.resize(n);
    A.diag.resize(n);
    A.upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t fl = (i + n - 1) % n;  // face i-1/2
        A.lower[i] = (d + bp[fl]) / dx;
        A.upper[i] = (d + bm[i]) / dx;
    }
    // diagonal from the column sums, so that mass is conserved by construction
    for (std::size_t j = 0; j < n; ++j) A.diag[j] = -(A.lower[(j + 1) % n] + A.upper[(j + n - 1) % n]);
    if (A.max_abs_column_sum() > 1e-12 * (std::abs(A.diag[0]) + 1.0))
        throw NumericalError("generator column sums are not zero");
    return A;
}

double slice_mass(std::span<const double> m, double dx) {
    double s = 0.0;
    for (double v : m) s += v;
    return s * dx;
}

std::vector<double> gaussian_density(const SpaceGrid& grid, double center, double width) {
    require(width > 0.0, "gaussian width must be positive");
    std::vector<double> m(grid.n_cells, 0.0);
    const double L = grid.length();
    for (std::size_t i = 0; i < grid.n_cells; ++i)
        for (int w = -3; w <= 3; ++w) {
            double r = (grid.center(i) - center + w * L) / width;
            m[i] += std::exp(-0.5 * r * r);
        }
    double mass = slice_mass(m, grid.dx());
    for (double& v : m) v /= mass;
    return m;
}

DensityField solve_fp(std::span<const double> m0, const GridField& drift, double nu, double beta,
                      const FpOptions& opt) {
    FractionalOrder order(beta);
    const SpaceGrid& sg = drift.space();
    const TimeGrid& tg = drift.time();
    const std::size_t nc = sg.n_cells, N = tg.n_steps;
    const double dx = sg.dx(), dt = tg.dt();
    require(m0.size() == nc, "initial density has the wrong number of cells");
    for (double v : m0) require(std::isfinite(v) && v >= 0.0, "initial density must be nonnegative");
    require(std::abs(slice_mass(m0, dx) - 1.0) <= 1e-12, "initial density must have unit mass");

    DensityField out;
    out.m = GridField(tg, sg);
    std::copy(m0.begin(), m0.end(), out.m.row(0).begin());

    FractionalStencil W = opt.ill_posed_variant
                              ? build_stencil(beta, StencilKind::rl_derivative, Direction::forward,
                                              tg.n_nodes(), dt, Scheme::grunwald_letnikov)
                              : build_stencil(order.derivative_order(), StencilKind::rl_derivative,
                                              Direction::forward, tg.n_nodes(), dt, Scheme::product_rectangle);
    const auto& w = W.weights;

    std::vector<double> hist(nc), rhs(nc), lo(nc), di(nc), up(nc);
    for (std::size_t n = 1; n <= N; ++n) {
        GeneratorMatrix A = assemble_generator(drift.row(n), nu, sg);
        std::fill(hist.begin(), hist.end(), 0.0);
        if (!opt.ill_posed_variant) {
            // (m^n - m^{n-1})/dt = A sum_{k=0}^{n-1} w_k m^{n-k}, newest term implicit
            for (std::size_t k = 1; k < n; ++k) {
                auto r = out.m.row(n - k);
                for (std::size_t i = 0; i < nc; ++i) hist[i] += w[k] * r[i];
            }
            auto Ah = A.apply(hist);
            auto prev = out.m.row(n - 1);
            for (std::size_t i = 0; i < nc; ++i) rhs[i] = prev[i] + dt * Ah[i];
            for (std::size_t i = 0; i < nc; ++i) {
                lo[i] = -dt * w[0] * A.lower[i];
                di[i] = 1.0 - dt * w[0] * A.diag[i];
                up[i] = -dt * w[0] * A.upper[i];
            }
        } else {
            // sum_{k=0}^{n} g_k m^{n-k} = A m^n
            for (std::size_t k = 1; k <= n; ++k) {
                auto r = out.m.row(n - k);
                for (std::size_t i = 0; i < nc; ++i) hist[i] += w[k] * r[i];
            }
            for (std::size_t i = 0; i < nc; ++i) {
                rhs[i] = -hist[i];
                lo[i] = -A.lower[i];
                di[i] = w[0] - A.diag[i];
                up[i] = -A.upper[i];
            }
        }
        auto next = detail::solve_cyclic(lo, di, up, rhs);

        double mx = *std::max_element(next.begin(), next.end());
        double mn = *std::min_element(next.begin(), next.end());
        if (mn < -opt.negativity_tol * std::max(1.0, mx)) {
            if (!opt.clip_negative)
                throw NumericalError("negative density " + std::to_string(mn) + " at step " + std::to_string(n) +
                                     "; reduce dt or enable clipping");
            for (double& v : next) v = std::max(v, 0.0);
            double mass = slice_mass(next, dx);
            for (double& v : next) v /= mass;
            out.clipped = true;
        }
        double drift_mass = std::abs(slice_mass(next, dx) - slice_mass(out.m.row(n - 1), dx));
        out.max_step_mass_drift = std::max(out.max_step_mass_drift, drift_mass);
        std::copy(next.begin(), next.end(), out.m.row(n).begin());
    }
    out.min_value = *std::min_element(out.m.data().begin(), out.m.data().end());
    return out;
}

double check_weak_form(const GridField& m, const GridField& drift, double nu, double beta,
                       const TestFunction& tf) {
    FractionalOrder order(beta);
    const TimeGrid& tg = m.time();
    const SpaceGrid& sg = m.space();
    const std::size_t N = tg.n_steps, nc = sg.n_cells;
    const double dx = sg.dx(), dt = tg.dt();
    require(drift.n_time() == m.n_time() && drift.n_cells() == nc, "drift and density grids differ");

    auto pair = [&](std::span<const double> a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < nc; ++i) s += a[i] * b[i];
        return s * dx;
    };
    std::vector<std::vector<double>> phi(N + 1, std::vector<double>(nc));
    for (std::size_t n = 0; n <= N; ++n)
        for (std::size_t i = 0; i < nc; ++i) phi[n][i] = tf.phi(tg.t(n), sg.center(i));

    double r = pair(m.row(0), phi[0]) - pair(m.row(N), phi[N]);
    for (std::size_t n = 1; n <= N; ++n) {
        std::vector<double> d(nc);
        for (std::size_t i = 0; i < nc; ++i) d[i] = phi[n][i] - phi[n - 1][i];
        r += pair(m.row(n), d);
    }
    // psi^p = b(t_{p+1}) phi_x(t_p) + nu phi_xx(t_p), paired with m^{p+1} through the backward stencil
    auto Wb = build_stencil(order.derivative_order(), StencilKind::rl_derivative, Direction::backward,
                            tg.n_nodes(), dt, Scheme::product_rectangle);
    for (std::size_t i = 0; i < nc; ++i) {
        double x = sg.center(i);
        std::vector<double> psi(N + 1, 0.0);
        for (std::size_t p = 0; p < N; ++p)
            psi[p] = drift(p + 1, i) * tf.phi_x(tg.t(p), x) + nu * tf.phi_xx(tg.t(p), x);
        auto Dpsi = apply_backward(Wb, psi);
        for (std::size_t p = 0; p < N; ++p) r += dt * dx * m(p + 1, i) * Dpsi[p];
    }
    return std::abs(r);
}

}  // namespace fracmfg
