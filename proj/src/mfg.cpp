#include "fracmfg/mfg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fracmfg/errors.hpp"
#include "fracmfg/fracops.hpp"
#include "fracmfg/subdiffusion.hpp"

namespace fracmfg {

namespace {

double inner(std::span<const double> a, std::span<const double> b, double dx) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * dx;
}

// Apply a backward stencil to every spatial column of f.
GridField backward_in_time(const FractionalStencil& s, const GridField& f) {
    GridField out(f.time(), f.space());
    std::vector<double> col(f.n_time());
    for (std::size_t i = 0; i < f.n_cells(); ++i) {
        for (std::size_t n = 0; n < f.n_time(); ++n) col[n] = f(n, i);
        auto r = apply_backward(s, col);
        for (std::size_t n = 0; n < f.n_time(); ++n) out(n, i) = r[n];
    }
    return out;
}

GridField forward_in_time(const FractionalStencil& s, const GridField& f) {
    GridField out(f.time(), f.space());
    std::vector<double> col(f.n_time());
    for (std::size_t i = 0; i < f.n_cells(); ++i) {
        for (std::size_t n = 0; n < f.n_time(); ++n) col[n] = f(n, i);
        auto r = apply_forward(s, col);
        for (std::size_t n = 0; n < f.n_time(); ++n) out(n, i) = r[n];
    }
    return out;
}

FractionalStencil memory_stencil(double beta, const TimeGrid& tg, Direction d) {
    return build_stencil(1.0 - beta, StencilKind::rl_derivative, d, tg.n_nodes(), tg.dt(),
                         Scheme::product_rectangle);
}

}  // namespace

std::vector<double> smoothed_coupling(const CouplingSpec& c, std::span<const double> m, const SpaceGrid& grid) {
    const std::size_t n = grid.n_cells;
    const double dx = grid.dx(), L = grid.length();
    const double eps = c.epsilon > 0.0 ? c.epsilon : 4.0 * dx;
    // periodic Gaussian mollifier, normalized on the grid
    std::vector<double> k(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (int w = -3; w <= 3; ++w) {
            double r = (static_cast<double>(j) * dx + w * L) / eps;
            k[j] += std::exp(-0.5 * r * r);
        }
    double ks = 0.0;
    for (double v : k) ks += v * dx;
    for (double& v : k) v /= ks;
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += k[(i + n - j) % n] * m[j];
        out[i] = c.kappa * s * dx + c.offset + (c.potential ? c.potential(grid.center(i)) : 0.0);
    }
    return out;
}

GridField coupling_source(const CouplingSpec& c, const GridField& m, double beta) {
    FractionalOrder order(beta);
    require(c.kappa >= 0.0, "coupling strength kappa must be nonnegative");
    const std::size_t N = m.time().n_steps;
    GridField S(m.time(), m.space());
    if (c.kind == CouplingKind::smoothed_local) {
        for (std::size_t p = 0; p <= N; ++p) {
            auto G = smoothed_coupling(c, m.row(std::min(p + 1, N)), m.space());
            std::copy(G.begin(), G.end(), S.row(p).begin());
        }
        return S;
    }
    auto gam = c.gamma ? c.gamma : [](double x) { return x; };
    GridField shifted(m.time(), m.space());
    for (std::size_t p = 0; p < N; ++p)
        for (std::size_t i = 0; i < m.n_cells(); ++i) shifted(p, i) = c.kappa * gam(m(p + 1, i));
    if (order.classical()) {
        S = shifted;
    } else {
        auto I = build_stencil(1.0 - beta, StencilKind::rl_integral, Direction::backward, m.time().n_nodes(),
                               m.time().dt(), Scheme::product_rectangle);
        S = backward_in_time(I, shifted);
    }
    for (std::size_t p = 0; p <= N; ++p)
        for (std::size_t i = 0; i < m.n_cells(); ++i)
            S(p, i) += c.offset + (c.potential ? c.potential(m.space().center(i)) : 0.0);
    return S;
}

void MFGProblem::validate() const {
    FractionalOrder order(beta);
    require(nu > 0.0, "nu must be positive");
    require(damping > 0.0 && damping <= 1.0, "damping must lie in (0,1]");
    require(tolerance > 0.0, "tolerance must be positive");
    require(max_iters >= 1, "max_iters must be positive");
    require(g.size() == space.n_cells, "terminal cost has the wrong number of cells");
    require(m0.size() == space.n_cells, "initial density has the wrong number of cells");
    double mass = 0.0;
    for (double v : m0) {
        require(v >= 0.0 && std::isfinite(v), "initial density must be nonnegative");
        mass += v * space.dx();
    }
    require(std::abs(mass - 1.0) <= 1e-12, "initial density must have unit mass");
    if (initial_guess) require(initial_guess->n_time() == time.n_nodes() && initial_guess->n_cells() == space.n_cells,
                               "initial guess has the wrong shape");
}

MFGProblem default_desk_problem() {
    MFGProblem p;
    p.g.resize(p.space.n_cells);
    for (std::size_t i = 0; i < p.space.n_cells; ++i)
        p.g[i] = 0.2 * std::cos(2.0 * std::numbers::pi * p.space.center(i));
    p.m0 = gaussian_density(p.space, 0.3, 0.08);
    return p;
}

GridField drift_from_value(const ValueField& vf) {
    GridField d(vf.feedback.time(), vf.feedback.space());
    const std::size_t N = d.time().n_steps;
    for (std::size_t n = 0; n <= N; ++n) {
        auto src = vf.feedback.row(n == 0 ? 0 : n - 1);
        std::copy(src.begin(), src.end(), d.row(n).begin());
    }
    return d;
}

double sup_w1(const GridField& a, const GridField& b) {
    require(a.n_time() == b.n_time() && a.n_cells() == b.n_cells(), "fields have different shapes");
    double s = 0.0;
    for (std::size_t n = 0; n < a.n_time(); ++n) s = std::max(s, wasserstein1(a.row(n), b.row(n), a.space().dx()));
    return s;
}

MFGSolution solve_mfg(const MFGProblem& p) {
    p.validate();
    GridField m(p.time, p.space);
    if (p.initial_guess) {
        m = *p.initial_guess;
    } else {
        for (std::size_t n = 0; n < m.n_time(); ++n) std::copy(p.m0.begin(), p.m0.end(), m.row(n).begin());
    }
    MFGSolution sol;
    for (std::size_t k = 1; k <= p.max_iters; ++k) {
        GridField S = coupling_source(p.coupling, m, p.beta);
        ValueField v = solve_hjb(p.g, S, p.nu, p.beta, p.ham, p.hjb);
        DensityField phi = solve_fp(p.m0, drift_from_value(v), p.nu, p.beta, p.fp);
        // the first update is undamped: the initial guess carries no information
        double th = k == 1 ? 1.0 : p.damping;
        GridField next = m;
        for (std::size_t q = 0; q < next.data().size(); ++q)
            next.data()[q] = (1.0 - th) * m.data()[q] + th * phi.m.data()[q];

        TraceRow row;
        row.iter = k;
        row.gap = sup_w1(next, m);
        row.duality_residual = duality_residual(v, phi.m, p);
        for (std::size_t n = 0; n < phi.m.n_time(); ++n)
            row.mass_error = std::max(row.mass_error, std::abs(slice_mass(phi.m.row(n), p.space.dx()) - 1.0));
        row.min_m = phi.min_value;
        sol.trace.push_back(row);

        m = std::move(next);
        sol.v = std::move(v);
        sol.m = std::move(phi);
        if (row.gap <= p.tolerance) {
            sol.converged = true;
            break;
        }
    }
    for (std::size_t q = 4; q < sol.trace.size(); ++q)
        if (sol.trace[q].gap > sol.trace[q - 1].gap) sol.trace_monotone = false;
    return sol;
}

double duality_residual(const ValueField& vf, const GridField& m, const MFGProblem& p) {
    const GridField& v = vf.v;
    require(v.n_time() == m.n_time() && v.n_cells() == m.n_cells(), "v and m live on different grids");
    const TimeGrid& tg = v.time();
    const SpaceGrid& sg = v.space();
    const std::size_t N = tg.n_steps, nc = sg.n_cells;
    const double dt = tg.dt(), dx = sg.dx();

    auto Wf = memory_stencil(p.beta, tg, Direction::forward);
    auto Wb = memory_stencil(p.beta, tg, Direction::backward);
    GridField Wm = forward_in_time(Wf, m);
    GridField S = coupling_source(p.coupling, m, p.beta);
    GridField F = hjb_bracket(v, S, p.nu, p.ham);
    GridField WF = backward_in_time(Wb, F);

    // FP residual with the transpose of the linearized HJB operator, paired with v^{n-1}
    double P1 = 0.0;
    std::vector<double> r(nc);
    for (std::size_t n = 1; n <= N; ++n) {
        auto vo = v.row(n - 1);
        auto wm = Wm.row(n);
        std::vector<double> hp(nc);
        for (std::size_t i = 0; i < nc; ++i) {
            double grad = (vo[(i + 1) % nc] - vo[(i + nc - 1) % nc]) / (2.0 * dx);
            hp[i] = p.ham.dH(tg.t(n - 1), sg.center(i), grad);
        }
        for (std::size_t i = 0; i < nc; ++i) {
            std::size_t ip = (i + 1) % nc, im = (i + nc - 1) % nc;
            double B = p.nu * (wm[ip] - 2.0 * wm[i] + wm[im]) / (dx * dx) +
                       (hp[ip] * wm[ip] - hp[im] * wm[im]) / (2.0 * dx);
            r[i] = (m(n, i) - m(n - 1, i)) / dt - B;
        }
        P1 += dt * inner(vo, r, dx);
    }
    double P2 = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < nc; ++i) r[i] = (v(n, i) - v(n + 1, i)) / dt + WF(n, i);
        P2 += dt * inner(m.row(n + 1), r, dx);
    }
    return std::abs(P1 - P2);
}

double monotonicity_probe(const CouplingSpec& c, const GridField& m1, const GridField& m2, double beta) {
    require(m1.n_time() == m2.n_time() && m1.n_cells() == m2.n_cells(), "trajectories have different shapes");
    const TimeGrid& tg = m1.time();
    GridField G1 = coupling_source(c, m1, beta), G2 = coupling_source(c, m2, beta);
    GridField dG(tg, m1.space());
    for (std::size_t q = 0; q < dG.data().size(); ++q) dG.data()[q] = G1.data()[q] - G2.data()[q];
    GridField D = backward_in_time(memory_stencil(beta, tg, Direction::backward), dG);
    const double dx = m1.space().dx();
    double s = 0.0;
    for (std::size_t n = 0; n < tg.n_steps; ++n)
        for (std::size_t i = 0; i < m1.n_cells(); ++i) s += (m1(n + 1, i) - m2(n + 1, i)) * D(n, i);
    return s * tg.dt() * dx;
}

SteadyResiduals steady_state_check(std::span<const double> v, std::span<const double> m, const MFGProblem& p) {
    const SpaceGrid& sg = p.space;
    const std::size_t nc = sg.n_cells;
    const double dx = sg.dx();
    require(v.size() == nc && m.size() == nc, "slices have the wrong number of cells");
    require(p.coupling.kind == CouplingKind::smoothed_local, "steady state needs a time-independent coupling");
    auto G = smoothed_coupling(p.coupling, m, sg);
    std::vector<double> drift(nc);
    SteadyResiduals r;
    for (std::size_t i = 0; i < nc; ++i) {
        std::size_t ip = (i + 1) % nc, im = (i + nc - 1) % nc;
        double grad = (v[ip] - v[im]) / (2.0 * dx);
        double lap = (v[ip] - 2.0 * v[i] + v[im]) / (dx * dx);
        r.hjb = std::max(r.hjb, std::abs(-p.nu * lap + p.ham.H(0.0, sg.center(i), grad) - G[i]));
        drift[i] = -p.ham.dH(0.0, sg.center(i), grad);
    }
    auto Am = assemble_generator(drift, p.nu, sg).apply(m);
    for (double x : Am) r.fp = std::max(r.fp, std::abs(x));
    return r;
}

}  // namespace fracmfg
