#include "fracmfg/subdiffusion.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

#include "fracmfg/errors.hpp"
#include "parallel.hpp"

namespace fracmfg {

namespace {

constexpr double kPi = std::numbers::pi;

// Kanter's function; D_1 = (A(U)/W)^{(1-beta)/beta} with U ~ U(0,pi), W ~ Exp(1).
double kanter_a(double beta, double u) {
    return std::pow(std::sin(beta * u) / std::sin(u), 1.0 / (1.0 - beta)) *
           std::sin((1.0 - beta) * u) / std::sin(beta * u);
}

void check_beta(double beta) {
    require(std::isfinite(beta) && beta > 0.0 && beta <= 1.0,
            "order must lie in (0,1], got " + std::to_string(beta));
}

}  // namespace

double sample_stable_increment(double beta, double d_tau, PathRng& rng) {
    check_beta(beta);
    require(d_tau > 0.0, "d_tau must be positive");
    if (beta == 1.0) return d_tau;
    double u = kPi * rng.uniform();
    double w = rng.exponential();
    double s = std::pow(kanter_a(beta, u) / w, (1.0 - beta) / beta);
    return std::pow(d_tau, 1.0 / beta) * s;
}

double stable_median(double beta) {
    check_beta(beta);
    require(beta < 1.0, "stable_median needs beta < 1");
    // bisection over a quadrature is slow; callers ask for the same few orders repeatedly
    static std::mutex mu;
    static std::map<double, double> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(beta); it != cache.end()) return it->second;
    }
    const double ex = beta / (1.0 - beta);
    boost::math::quadrature::tanh_sinh<double> ts;
    auto cdf = [&](double x) {
        double xm = std::pow(x, -ex);
        return ts.integrate([&](double u) { return std::exp(-kanter_a(beta, u) * xm); }, 0.0, kPi) / kPi;
    };
    double lo = -60.0, hi = 60.0;  // bracket in log x
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        double mid = 0.5 * (lo + hi);
        (cdf(std::exp(mid)) < 0.5 ? lo : hi) = mid;
    }
    double med = std::exp(0.5 * (lo + hi));
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(beta, med);
    return med;
}

double default_tau_step(double beta, const TimeGrid& tg) {
    check_beta(beta);
    if (beta == 1.0) return tg.dt() / 4.0;
    double by_median = std::pow(tg.dt() / (4.0 * stable_median(beta)), beta);
    double by_moment = std::pow(tg.T, beta) / std::tgamma(1.0 + beta) / 512.0;
    return std::min(by_median, by_moment);
}

SubordinatorPath simulate_subordinator(double beta, double tau_step, double level, PathRng& rng) {
    check_beta(beta);
    require(tau_step > 0.0, "tau_step must be positive");
    SubordinatorPath p;
    p.beta = beta;
    p.tau_step = tau_step;
    p.d_values.push_back(0.0);
    // grows until the level is crossed; the grid is never truncated
    while (p.d_values.back() <= level)
        p.d_values.push_back(p.d_values.back() + sample_stable_increment(beta, tau_step, rng));
    return p;
}

InversePath invert_subordinator(const SubordinatorPath& d, const TimeGrid& tg) {
    InversePath e;
    e.t_grid = tg.nodes();
    e.e_values.assign(e.t_grid.size(), 0.0);
    std::size_t j = 0;
    for (std::size_t n = 1; n < e.t_grid.size(); ++n) {
        while (j < d.d_values.size() && d.d_values[j] <= e.t_grid[n]) ++j;
        if (j == d.d_values.size()) throw NumericalError("subordinator path ends before t = T");
        e.e_values[n] = d.tau(j);
    }
    return e;
}

InversePath build_inverse_path(double beta, const TimeGrid& tg, PathRng& rng, double tau_step) {
    check_beta(beta);
    if (beta == 1.0) {
        InversePath e;
        e.t_grid = tg.nodes();
        e.e_values = e.t_grid;
        return e;
    }
    if (tau_step <= 0.0) tau_step = default_tau_step(beta, tg);
    return invert_subordinator(simulate_subordinator(beta, tau_step, tg.T, rng), tg);
}

CoefficientSpec constant_coefficients(double b, double sigma) {
    CoefficientSpec c;
    c.drift = [b](double, double) { return b; };
    c.diffusion = [sigma](double, double) { return sigma; };
    c.lipschitz = 0.0;
    c.bound = std::abs(b) + std::abs(sigma);
    return c;
}

CoefficientSpec diffusion_coefficients(double nu, std::function<double(double, double)> drift,
                                       double lipschitz, double bound) {
    require(nu >= 0.0, "nu must be nonnegative");
    CoefficientSpec c;
    double s = std::sqrt(2.0 * nu);
    c.drift = std::move(drift);
    c.diffusion = [s](double, double) { return s; };
    c.lipschitz = lipschitz;
    c.bound = bound;
    return c;
}

void validate_coefficients(const CoefficientSpec& c, double T, double x_lo, double x_hi) {
    require(static_cast<bool>(c.drift) && static_cast<bool>(c.diffusion), "coefficients must be set");
    const int nt = 9, nx = 33;
    const double tol = 1e-12;
    for (int a = 0; a < nt; ++a) {
        double t = T * a / (nt - 1);
        double pb = 0, ps = 0, px = 0;
        for (int i = 0; i < nx; ++i) {
            double x = x_lo + (x_hi - x_lo) * i / (nx - 1);
            double b = c.drift(t, x), s = c.diffusion(t, x);
            if (!std::isfinite(b) || !std::isfinite(s))
                throw ParameterError("coefficients not finite at t=" + std::to_string(t) + " x=" + std::to_string(x));
            if (std::abs(b) + std::abs(s) > c.bound * (1 + tol) + tol)
                throw ParameterError("|b| + |sigma| exceeds the bound M at x=" + std::to_string(x));
            if (i > 0) {
                double q = std::max(std::abs(b - pb), std::abs(s - ps)) / (x - px);
                if (q > c.lipschitz * (1 + tol) + tol)
                    throw ParameterError("coefficients exceed the Lipschitz bound L near x=" + std::to_string(x));
            }
            pb = b, ps = s, px = x;
        }
    }
}

std::vector<double> PathEnsemble::x_at(std::size_t n) const {
    std::vector<double> v(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) v[p] = x(p, n);
    return v;
}

std::vector<double> PathEnsemble::e_at(std::size_t n) const {
    std::vector<double> v(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) v[p] = e(p, n);
    return v;
}

PathEnsemble simulate_time_changed_sde(const CoefficientSpec& coeffs, double x0, double beta,
                                       const TimeGrid& tg, std::size_t n_paths, std::uint64_t seed,
                                       const SimOptions& opt) {
    check_beta(beta);
    require(n_paths >= 1, "need at least one path");
    require(std::isfinite(x0), "x0 must be finite");
    validate_coefficients(coeffs, tg.T, x0 - 10.0, x0 + 10.0);

    PathEnsemble ens;
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.beta = beta;
    ens.t_grid = tg.nodes();
    const std::size_t nt = ens.t_grid.size();
    ens.x_paths.assign(n_paths * nt, 0.0);
    ens.e_paths.assign(n_paths * nt, 0.0);

    double dtau = opt.tau_step > 0.0 ? opt.tau_step : default_tau_step(beta, tg);
    std::size_t per_node = 0;
    if (beta == 1.0) {
        per_node = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(tg.dt() / dtau)));
        dtau = tg.dt() / static_cast<double>(per_node);
    }
    const double sq = std::sqrt(dtau);

    detail::parallel_for(n_paths, opt.threads, [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            PathRng rng(seed, p);
            double* xs = &ens.x_paths[p * nt];
            double* es = &ens.e_paths[p * nt];
            double y = x0, d = 0.0;
            std::size_t j = 0;
            xs[0] = x0;
            auto step = [&] {
                double b = coeffs.drift(d, y), s = coeffs.diffusion(d, y);
                double inc = beta == 1.0 ? dtau : sample_stable_increment(beta, dtau, rng);
                y += b * dtau + s * sq * rng.normal();
                ++j;
                d = beta == 1.0 ? dtau * static_cast<double>(j) : d + inc;
                if (!std::isfinite(y))
                    throw NumericalError("non-finite state on path " + std::to_string(p) + " at step " +
                                         std::to_string(j));
            };
            for (std::size_t n = 1; n < nt; ++n) {
                if (beta == 1.0) {
                    for (std::size_t k = 0; k < per_node; ++k) step();
                    es[n] = ens.t_grid[n];
                } else {
                    while (d <= ens.t_grid[n]) step();
                    es[n] = dtau * static_cast<double>(j);
                }
                xs[n] = y;
            }
        }
    });
    return ens;
}

DensitySlice empirical_density(const PathEnsemble& ens, std::size_t t_index, const SpaceGrid& grid) {
    require(t_index < ens.n_time(), "t_index out of range");
    DensitySlice out;
    out.values.assign(grid.n_cells, 0.0);
    std::size_t inside = 0;
    const double dx = grid.dx();
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
        double x = ens.x(p, t_index);
        double r = (x - grid.x_min) / dx;
        if (r < 0.0 || r >= static_cast<double>(grid.n_cells)) continue;
        out.values[static_cast<std::size_t>(r)] += 1.0;
        ++inside;
    }
    out.escaped_mass = 1.0 - static_cast<double>(inside) / static_cast<double>(ens.n_paths);
    if (out.escaped_mass > 1e-3)
        throw DomainError("escaped mass " + std::to_string(out.escaped_mass) +
                          " exceeds 0.1%; enlarge the domain");
    for (double& v : out.values) v /= static_cast<double>(inside) * dx;
    return out;
}

double wasserstein1(std::span<const double> d1, std::span<const double> d2, double dx) {
    require(d1.size() == d2.size(), "densities live on different grids");
    require(dx > 0.0, "dx must be positive");
    double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < d1.size(); ++i) m1 += d1[i] * dx, m2 += d2[i] * dx;
    if (std::abs(m1 - m2) > 1e-9)
        throw ParameterError("mass mismatch " + std::to_string(m1 - m2) + " in wasserstein1");
    double f = 0.0, w = 0.0;
    for (std::size_t i = 0; i < d1.size(); ++i) {
        f += (d1[i] - d2[i]) * dx;
        w += std::abs(f) * dx;
    }
    return w;
}

double holder_ratio(const GridField& m, double beta, std::size_t stride) {
    require(stride >= 1, "stride must be positive");
    std::vector<std::size_t> idx;
    for (std::size_t n = 0; n < m.n_time(); n += stride) idx.push_back(n);
    require(idx.size() >= 3, "holder_ratio needs at least 3 slices");
    const double dx = m.space().dx();
    double best = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            double w = wasserstein1(m.row(idx[a]), m.row(idx[b]), dx);
            double dt = m.time().t(idx[b]) - m.time().t(idx[a]);
            best = std::max(best, w / std::pow(dt, 0.5 * beta));
        }
    return best;
}

PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> y) {
    require(t.size() == y.size(), "fit_power_law needs matching lengths");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= 0.0) continue;
        require(y[i] > 0.0, "fit_power_law needs positive values");
        double lx = std::log(t[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
        ++n;
    }
    require(n >= 2, "fit_power_law needs two points with t > 0");
    double p = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {p, std::exp((sy - p * sx) / n)};
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    double m = mean(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double quantile(std::vector<double> v, double q) {
    require(!v.empty(), "quantile of empty sample");
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

}  // namespace fracmfg
