#include "fracmfg/hjbsolver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "fracmfg/errors.hpp"
#include "fracmfg/fracops.hpp"
#include "fracmfg/subdiffusion.hpp"
#include "linalg.hpp"
#include "parallel.hpp"

namespace fracmfg {

HamiltonianSpec HamiltonianSpec::truncated_quadratic(double u_max) {
    require(std::isfinite(u_max) && u_max > 0.0, "u_max must be positive");
    HamiltonianSpec h;
    h.kind = HamiltonianKind::truncated_quadratic;
    h.u_max = u_max;
    h.H = [u_max](double, double, double p) {
        double a = std::abs(p);
        return a <= u_max ? 0.5 * p * p : u_max * a - 0.5 * u_max * u_max;
    };
    h.dH = [u_max](double, double, double p) { return std::clamp(p, -u_max, u_max); };
    return h;
}

HamiltonianSpec HamiltonianSpec::custom(std::function<double(double, double, double)> H,
                                        std::function<double(double, double, double)> dH, double u_max) {
    require(static_cast<bool>(H) && static_cast<bool>(dH), "custom Hamiltonian needs H and dH");
    require(std::isfinite(u_max) && u_max >= 0.0, "u_max must be nonnegative");
    HamiltonianSpec h;
    h.kind = HamiltonianKind::custom;
    h.u_max = u_max;
    h.H = std::move(H);
    h.dH = std::move(dH);
    return h;
}

HamiltonianSpec HamiltonianSpec::zero() {
    return custom([](double, double, double) { return 0.0; }, [](double, double, double) { return 0.0; }, 0.0);
}

void validate_hamiltonian(const HamiltonianSpec& h, double T, double x_lo, double x_hi) {
    require(static_cast<bool>(h.H) && static_cast<bool>(h.dH), "Hamiltonian handles are not set");
    const double pmax = 4.0 * std::max(1.0, h.u_max);
    for (int a = 0; a <= 4; ++a) {
        double t = T * a / 4.0;
        for (int b = 0; b <= 8; ++b) {
            double x = x_lo + (x_hi - x_lo) * b / 8.0;
            require(std::isfinite(h.H(t, x, 0.0)), "H(t,x,0) is not finite");
            for (int c = -20; c < 20; ++c) {
                double p = pmax * c / 20.0, q = pmax * (c + 1) / 20.0;
                double mid = h.H(t, x, 0.5 * (p + q));
                if (mid > 0.5 * (h.H(t, x, p) + h.H(t, x, q)) + 1e-12 * (1.0 + std::abs(mid)))
                    throw ParameterError("H is not convex in p near p=" + std::to_string(p));
                if (std::abs(h.dH(t, x, p)) > h.u_max * (1.0 + 1e-12) + 1e-12)
                    throw ParameterError("|dH/dp| exceeds u_max at p=" + std::to_string(p));
            }
        }
    }
}

namespace {

std::vector<double> central_gradient(std::span<const double> v, double dx) {
    const std::size_t n = v.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * dx);
    return g;
}

std::vector<double> laplacian(std::span<const double> v, double dx) {
    const std::size_t n = v.size();
    std::vector<double> l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (dx * dx);
    return l;
}

bool has_rows(const GridField& f) { return !f.data().empty(); }

}  // namespace

GridField hjb_bracket(const GridField& v, const GridField& source, double nu, const HamiltonianSpec& ham) {
    GridField F(v.time(), v.space());
    const double dx = v.space().dx();
    for (std::size_t n = 0; n < v.n_time(); ++n) {
        auto lap = laplacian(v.row(n), dx);
        auto grad = central_gradient(v.row(n), dx);
        double t = v.time().t(n);
        for (std::size_t i = 0; i < v.n_cells(); ++i) {
            double G = has_rows(source) ? source(n, i) : 0.0;
            F(n, i) = -nu * lap[i] + ham.H(t, v.space().center(i), grad[i]) - G;
        }
    }
    return F;
}

ValueField make_value_field(GridField v, const HamiltonianSpec& ham, double d2_bound) {
    ValueField vf;
    const double dx = v.space().dx();
    vf.gradient = GridField(v.time(), v.space());
    vf.feedback = GridField(v.time(), v.space());
    for (std::size_t n = 0; n < v.n_time(); ++n) {
        auto grad = central_gradient(v.row(n), dx);
        auto lap = laplacian(v.row(n), dx);
        for (std::size_t i = 0; i < v.n_cells(); ++i) {
            vf.gradient(n, i) = grad[i];
            vf.feedback(n, i) = -ham.dH(v.time().t(n), v.space().center(i), grad[i]);
            vf.max_d2 = std::max(vf.max_d2, std::abs(lap[i]));
        }
    }
    vf.d2_bound_violated = vf.max_d2 > d2_bound;
    vf.v = std::move(v);
    return vf;
}

ValueField solve_hjb(std::span<const double> g, const GridField& source, double nu, double beta,
                     const HamiltonianSpec& ham, const HjbOptions& opt) {
    FractionalOrder order(beta);
    require(static_cast<bool>(ham.H) && static_cast<bool>(ham.dH), "Hamiltonian handles are not set");
    require(std::isfinite(nu) && nu > 0.0, "nu must be positive");
    const TimeGrid& tg = source.time();
    const SpaceGrid& sg = source.space();
    const std::size_t N = tg.n_steps, nc = sg.n_cells;
    const double dt = tg.dt(), dx = sg.dx();
    require(g.size() == nc, "terminal cost has the wrong number of cells");
    for (double x : g) require(std::isfinite(x), "terminal cost must be finite");

    GridField G = source;
    if (opt.standard_time_source) {
        auto I = build_stencil(beta, StencilKind::rl_integral, Direction::backward, tg.n_nodes(), dt,
                               Scheme::product_rectangle);
        std::vector<double> col(tg.n_nodes());
        for (std::size_t i = 0; i < nc; ++i) {
            for (std::size_t n = 0; n <= N; ++n) col[n] = source(n, i);
            auto Ic = apply_backward(I, col);
            for (std::size_t n = 0; n <= N; ++n) G(n, i) = Ic[n];
        }
    }

    // the reflected problem s = T - t is marched forward with the forward stencil
    auto W = build_stencil(order.derivative_order(), StencilKind::rl_derivative, Direction::forward,
                           tg.n_nodes(), dt, Scheme::product_rectangle);
    const auto& w = W.weights;
    const double c = dt * w[0];

    GridField v(tg, sg);
    GridField F(tg, sg);  // bracket at physical nodes, filled as the march proceeds
    std::copy(g.begin(), g.end(), v.row(N).begin());
    int max_iter = 0;

    std::vector<double> hist(nc), R(nc), lo(nc), di(nc), up(nc);
    for (std::size_t s = 1; s <= N; ++s) {
        const std::size_t n = N - s;  // physical node being computed
        const double t = tg.t(n);
        std::fill(hist.begin(), hist.end(), 0.0);
        for (std::size_t k = 1; k < s; ++k) {
            auto Fr = F.row(n + k);
            for (std::size_t i = 0; i < nc; ++i) hist[i] += w[k] * Fr[i];
        }
        auto vn = v.row(n);
        auto vp = v.row(n + 1);
        std::vector<double> x(vp.begin(), vp.end());
        bool done = false;
        for (int it = 1; it <= opt.max_inner; ++it) {
            auto lap = laplacian(x, dx);
            auto grad = central_gradient(x, dx);
            double scale = 1.0;
            for (std::size_t i = 0; i < nc; ++i) {
                double xi = sg.center(i);
                R[i] = x[i] - vp[i] + c * (-nu * lap[i] + ham.H(t, xi, grad[i]) - G(n, i)) + dt * hist[i];
                double hp = ham.dH(t, xi, grad[i]);
                lo[i] = -c * nu / (dx * dx) - c * hp / (2.0 * dx);
                di[i] = 1.0 + 2.0 * c * nu / (dx * dx);
                up[i] = -c * nu / (dx * dx) + c * hp / (2.0 * dx);
                scale = std::max(scale, std::abs(x[i]));
            }
            auto delta = detail::solve_cyclic(lo, di, up, R);
            double step = 0.0;
            for (std::size_t i = 0; i < nc; ++i) {
                x[i] -= delta[i];
                step = std::max(step, std::abs(delta[i]));
            }
            if (step <= opt.inner_tol * scale) {
                max_iter = std::max(max_iter, it);
                done = true;
                break;
            }
        }
        if (!done)
            throw NumericalError("HJB inner iteration did not converge at t=" + std::to_string(t) + " after " +
                                 std::to_string(opt.max_inner) + " iterations");
        std::copy(x.begin(), x.end(), vn.begin());
        auto lap = laplacian(x, dx);
        auto grad = central_gradient(x, dx);
        for (std::size_t i = 0; i < nc; ++i)
            F(n, i) = -nu * lap[i] + ham.H(t, sg.center(i), grad[i]) - G(n, i);
    }
    ValueField vf = make_value_field(std::move(v), ham, opt.d2_bound);
    vf.max_inner_iterations = max_iter;
    return vf;
}

double rl_form_residual(const ValueField& vf, const GridField& source, double nu, double beta,
                        const HamiltonianSpec& ham) {
    FractionalOrder order(beta);
    const auto& v = vf.v;
    const TimeGrid& tg = v.time();
    const std::size_t N = tg.n_steps;
    GridField F = hjb_bracket(v, source, nu, ham);
    auto Wb = build_stencil(order.derivative_order(), StencilKind::rl_derivative, Direction::backward,
                            tg.n_nodes(), tg.dt(), Scheme::product_rectangle);
    double worst = 0.0;
    std::vector<double> col(tg.n_nodes());
    for (std::size_t i = 0; i < v.n_cells(); ++i) {
        for (std::size_t n = 0; n <= N; ++n) col[n] = F(n, i);
        auto D = apply_backward(Wb, col);
        for (std::size_t n = 0; n < N; ++n)
            worst = std::max(worst, std::abs((v(n, i) - v(n + 1, i)) / tg.dt() + D[n]));
    }
    return worst;
}

double caputo_form_residual(const ValueField& vf, const GridField& source, double nu, double beta,
                            const HamiltonianSpec& ham, double layer) {
    FractionalOrder order(beta);
    const auto& v = vf.v;
    const TimeGrid& tg = v.time();
    const std::size_t N = tg.n_steps;
    require(layer >= 0.0 && layer < tg.T, "terminal layer must lie in [0, T)");
    GridField F = hjb_bracket(v, source, nu, ham);
    auto Rb = build_stencil(beta, StencilKind::rl_derivative, Direction::backward, tg.n_nodes(), tg.dt(),
                            Scheme::product_rectangle);
    double worst = 0.0, fmax = 0.0;
    std::vector<double> col(tg.n_nodes());
    for (std::size_t i = 0; i < v.n_cells(); ++i) {
        for (std::size_t n = 0; n <= N; ++n) col[n] = v(n, i);
        auto C = regularized_caputo(Rb, col, v(N, i));
        for (std::size_t n = 0; n < N; ++n) {
            if (tg.T - tg.t(n) < layer * (1.0 - 1e-12)) break;
            worst = std::max(worst, std::abs(C[n] + F(n, i)));
            fmax = std::max(fmax, std::abs(F(n, i)));
        }
    }
    return fmax > 0.0 ? worst / fmax : worst;
}

ValueField mild_solution_linear(std::span<const double> g, const GridField& source, double nu, double beta) {
    FractionalOrder order(beta);
    require(std::isfinite(nu) && nu >= 0.0, "nu must be nonnegative");
    const TimeGrid& tg = source.time();
    const SpaceGrid& sg = source.space();
    const std::size_t N = tg.n_steps, nc = sg.n_cells, nm = nc / 2 + 1;
    require(g.size() == nc, "terminal cost has the wrong number of cells");
    const bool with_source = has_rows(source);

    std::vector<double> buf(nc);
    std::vector<std::complex<double>> spec(nm);
    fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(nc), buf.data(),
                                         reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_c2r_1d(static_cast<int>(nc), reinterpret_cast<fftw_complex*>(spec.data()),
                                         buf.data(), FFTW_ESTIMATE);
    auto transform = [&](std::span<const double> in) {
        std::copy(in.begin(), in.end(), buf.begin());
        fftw_execute(fwd);
        return spec;
    };

    auto ghat = transform(g);
    std::vector<std::vector<std::complex<double>>> lhat;
    if (with_source)
        for (std::size_t n = 0; n <= N; ++n) lhat.push_back(transform(source.row(n)));

    std::vector<std::vector<std::complex<double>>> vhat(N + 1, std::vector<std::complex<double>>(nm));
    std::vector<double> etab(N + 1);
    const double L = sg.length();
    try {
        for (std::size_t j = 0; j < nm; ++j) {
            double k = 2.0 * std::numbers::pi * static_cast<double>(j) / L;
            double lam = nu * k * k;
            for (std::size_t i = 0; i <= N; ++i) {
                double tau = tg.t(i);
                etab[i] = lam == 0.0 ? 1.0 : mittag_leffler(beta, 1.0, -lam * std::pow(tau, beta));
            }
            for (std::size_t n = 0; n <= N; ++n) {
                std::complex<double> acc = etab[N - n] * ghat[j];
                if (with_source)
                    for (std::size_t m = n; m < N; ++m) {
                        // exact kernel mass over [t_m, t_{m+1}], trapezoid average of the source
                        double a = tg.t(m - n), b = tg.t(m + 1 - n);
                        double kint = lam == 0.0 ? (std::pow(b, beta) - std::pow(a, beta)) / std::tgamma(1.0 + beta)
                                                 : (etab[m - n] - etab[m + 1 - n]) / lam;
                        acc += 0.5 * (lhat[m][j] + lhat[m + 1][j]) * kint;
                    }
                vhat[n][j] = acc;
            }
        }
    } catch (...) {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        throw;
    }
    GridField v(tg, sg);
    for (std::size_t n = 0; n <= N; ++n) {
        spec = vhat[n];
        fftw_execute(bwd);
        for (std::size_t i = 0; i < nc; ++i) v(n, i) = buf[i] / static_cast<double>(nc);
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    return make_value_field(std::move(v), HamiltonianSpec::zero(), std::numeric_limits<double>::infinity());
}

double interpolate(const GridField& f, std::size_t n, double x) {
    const SpaceGrid& sg = f.space();
    const std::size_t nc = sg.n_cells;
    double r = (sg.wrap(x) - sg.x_min) / sg.dx() - 0.5;
    double fl = std::floor(r);
    double w = r - fl;
    long i0 = static_cast<long>(fl);
    std::size_t a = static_cast<std::size_t>((i0 % static_cast<long>(nc) + static_cast<long>(nc)) % static_cast<long>(nc));
    std::size_t b = (a + 1) % nc;
    return (1.0 - w) * f(n, a) + w * f(n, b);
}

namespace {

std::size_t node_at(const TimeGrid& tg, double t) {
    double r = t / tg.dt();
    auto n = static_cast<std::size_t>(std::floor(r + 1e-9));
    return std::min(n, tg.n_steps);
}

// Payoff of each path over [t0, end] with continuation value `cont` at the end.
std::vector<double> simulate_payoffs(const ControlPolicy& policy, std::size_t t0, double x0, std::size_t end,
                                     const std::function<double(double)>& cont, std::size_t n_paths,
                                     std::uint64_t seed, const ControlProblem& prob, const McOptions& opt) {
    FractionalOrder order(prob.beta);
    const TimeGrid& tg = prob.time;
    require(t0 <= end && end <= tg.n_steps, "time indices out of range");
    require(n_paths >= 2, "need at least two paths");
    require(opt.substeps >= 1, "substeps must be positive");
    require(static_cast<bool>(policy.u), "control policy is not set");
    const double ds = tg.dt() / static_cast<double>(opt.substeps);
    require(opt.op_step >= 0.0, "operational step must be nonnegative");
    const double op_step = opt.op_step > 0.0 ? opt.op_step : ds;
    const std::size_t M = (end - t0) * opt.substeps;
    const std::size_t MT = (tg.n_steps - t0) * opt.substeps;
    const bool with_source = has_rows(prob.source);
    auto L = prob.running_cost ? prob.running_cost : [](double, double, double u) { return 0.5 * u * u; };

    std::vector<double> pay(n_paths, 0.0);
    detail::parallel_for(n_paths, opt.threads, [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            PathRng rng(seed, p);
            std::vector<double> e;
            if (M > 0) {
                if (opt.anchor == ClockAnchor::start) {
                    e = build_inverse_path(prob.beta, TimeGrid(M * ds, M), rng, opt.tau_step).e_values;
                } else {
                    auto eb = build_inverse_path(prob.beta, TimeGrid(MT * ds, MT), rng, opt.tau_step).e_values;
                    e.resize(M + 1);
                    for (std::size_t j = 0; j <= M; ++j) e[j] = eb[MT] - eb[MT - j];
                }
            }
            double x = x0, cost = 0.0;
            for (std::size_t j = 0; j < M; ++j) {
                double dE = e[j + 1] - e[j];
                if (dE <= 0.0) continue;
                double s = tg.t(t0) + static_cast<double>(j) * ds;
                std::size_t node = t0 + j / opt.substeps;
                // the clock can run far ahead of ds; Euler in operational time needs its own step
                auto pieces = static_cast<std::size_t>(std::ceil(dE / op_step));
                double h = dE / static_cast<double>(pieces);
                for (std::size_t k = 0; k < pieces; ++k) {
                    double u = policy.u(s, x);
                    double G = with_source ? interpolate(prob.source, node, x) : 0.0;
                    cost += (L(s, x, u) + G) * h;
                    x = prob.space.wrap(x + u * h + std::sqrt(2.0 * prob.nu * h) * rng.normal());
                }
                if (!std::isfinite(x)) throw NumericalError("non-finite state on path " + std::to_string(p));
            }
            pay[p] = cost + cont(x);
        }
    });
    return pay;
}

McEstimate summarize(const std::vector<double>& pay) {
    McEstimate r;
    r.estimate = mean(pay);
    double s = 0.0;
    for (double v : pay) s += (v - r.estimate) * (v - r.estimate);
    r.std_error = std::sqrt(s / static_cast<double>(pay.size() - 1) / static_cast<double>(pay.size()));
    return r;
}

}  // namespace

ControlPolicy feedback_policy(const ValueField& vf) {
    ControlPolicy p;
    const GridField* fb = &vf.feedback;
    p.u = [fb](double t, double x) { return interpolate(*fb, node_at(fb->time(), t), x); };
    for (double v : vf.feedback.data()) p.bound = std::max(p.bound, std::abs(v));
    return p;
}

ControlPolicy constant_policy(double u) {
    ControlPolicy p;
    p.u = [u](double, double) { return u; };
    p.bound = std::abs(u);
    return p;
}

McEstimate estimate_value_mc(const ControlPolicy& policy, std::size_t t0_index, double x0, std::size_t n_paths,
                             std::uint64_t seed, const ControlProblem& prob, const McOptions& opt) {
    require(prob.terminal.size() == prob.space.n_cells, "terminal cost has the wrong number of cells");
    GridField gf(TimeGrid(prob.time.T, 1), prob.space);
    std::copy(prob.terminal.begin(), prob.terminal.end(), gf.row(0).begin());
    auto cont = [&gf](double x) { return interpolate(gf, 0, x); };
    return summarize(simulate_payoffs(policy, t0_index, x0, prob.time.n_steps, cont, n_paths, seed, prob, opt));
}

DppResult dpp_residual(const ValueField& vf, std::size_t t0_index, double x0, std::size_t theta_index,
                       std::size_t n_paths, std::uint64_t seed, const ControlProblem& prob, const McOptions& opt) {
    require(theta_index >= t0_index && theta_index < vf.v.n_time(), "theta must be a grid time in [t, T]");
    DppResult r;
    r.value = interpolate(vf.v, t0_index, x0);
    if (theta_index == t0_index) {
        r.estimate = r.value;
        return r;
    }
    auto cont = [&vf, theta_index](double x) { return interpolate(vf.v, theta_index, x); };
    auto est = summarize(
        simulate_payoffs(feedback_policy(vf), t0_index, x0, theta_index, cont, n_paths, seed, prob, opt));
    r.estimate = est.estimate;
    r.std_error = est.std_error;
    r.residual = std::abs(r.value - r.estimate);
    return r;
}

}  // namespace fracmfg
