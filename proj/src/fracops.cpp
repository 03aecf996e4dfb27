#include "fracmfg/fracops.hpp"

#include <cmath>
#include <string>

#include "fracmfg/errors.hpp"

namespace fracmfg {

namespace {

// k^b with the b -> 0+ limit 0^b = 0 kept at b = 0.
double pw(double k, double b) { return k == 0.0 ? 0.0 : std::pow(k, b); }

double rgamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    return 1.0 / std::tgamma(x);
}

std::vector<double> gl_weights(double order, std::size_t n, double dt) {
    // Binomial weights of (1 - z)^order, scaled by dt^-order. Negative order is an integral.
    std::vector<double> w(n);
    w[0] = 1.0;
    for (std::size_t k = 1; k < n; ++k) w[k] = w[k - 1] * (1.0 - (order + 1.0) / static_cast<double>(k));
    double scale = std::pow(dt, -order);
    for (double& x : w) x *= scale;
    return w;
}

std::vector<double> pr_derivative_weights(double mu, std::size_t n, double dt) {
    // d/dt of the piecewise-constant product integral of order 1 - mu.
    double b = 1.0 - mu;
    double g = std::tgamma(1.0 + b);
    std::vector<double> c(n), w(n);
    for (std::size_t k = 0; k < n; ++k) {
        double kk = static_cast<double>(k);
        c[k] = (pw(kk + 1.0, b) - pw(kk, b)) / g;
    }
    double scale = std::pow(dt, -mu);
    w[0] = c[0] * scale;
    for (std::size_t k = 1; k < n; ++k) w[k] = (c[k] - c[k - 1]) * scale;
    return w;
}

std::vector<double> toeplitz_inverse(const std::vector<double>& w) {
    std::vector<double> r(w.size(), 0.0);
    r[0] = 1.0 / w[0];
    for (std::size_t i = 1; i < w.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 1; j <= i; ++j) s += w[j] * r[i - j];
        r[i] = -s / w[0];
    }
    return r;
}

std::vector<double> l1_weights(double mu, std::size_t n, double dt) {
    double b = 1.0 - mu;
    double scale = std::pow(dt, -mu) / std::tgamma(2.0 - mu);
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        double kk = static_cast<double>(k);
        w[k] = (pw(kk + 1.0, b) - pw(kk, b)) * scale;
    }
    return w;
}

void check_len(const FractionalStencil& s, std::span<const double> f) {
    if (f.size() != s.n_nodes())
        throw ParameterError("sample length " + std::to_string(f.size()) +
                             " does not match stencil length " + std::to_string(s.n_nodes()));
}

}  // namespace

FractionalOrder::FractionalOrder(double value) : v_(value) {
    require(std::isfinite(value) && value > 0.0 && value <= 1.0,
            "order must lie in (0,1], got " + std::to_string(value));
}

std::size_t FractionalStencil::start_offset() const {
    if (kind == StencilKind::caputo_derivative) return 1;
    if (order == 0.0) return 0;
    return scheme == Scheme::product_rectangle ? 1 : 0;
}

double FractionalStencil::declared_order() const {
    if (kind == StencilKind::caputo_derivative) return 2.0 - order;
    // measured on t >= T/2 for smooth f with f(0) = 0
    return scheme == Scheme::product_rectangle && order > 0.0 ? 2.0 - order : 1.0;
}

FractionalStencil build_stencil(double order, StencilKind kind, Direction direction,
                                std::size_t n_nodes, double dt, Scheme scheme) {
    bool derivative = kind != StencilKind::rl_integral;
    bool ok = std::isfinite(order) && order <= 1.0 && (order > 0.0 || (derivative && order == 0.0));
    require(ok, "order must lie in (0,1], got " + std::to_string(order));
    require(n_nodes >= 2, "stencil needs at least 2 nodes");
    require(std::isfinite(dt) && dt > 0.0, "stencil needs dt > 0");

    FractionalStencil s;
    s.order = order;
    s.kind = kind;
    s.direction = direction;
    s.scheme = scheme;
    s.dt = dt;
    if (derivative && order == 0.0) {
        s.weights.assign(n_nodes, 0.0);
        s.weights[0] = 1.0;
        return s;
    }
    switch (kind) {
        case StencilKind::rl_derivative:
            s.weights = scheme == Scheme::grunwald_letnikov ? gl_weights(order, n_nodes, dt)
                                                            : pr_derivative_weights(order, n_nodes, dt);
            break;
        case StencilKind::rl_integral:
            s.weights = scheme == Scheme::grunwald_letnikov
                            ? gl_weights(-order, n_nodes, dt)
                            : toeplitz_inverse(pr_derivative_weights(order, n_nodes, dt));
            break;
        case StencilKind::caputo_derivative:
            s.weights = l1_weights(order, n_nodes, dt);
            break;
    }
    return s;
}

FractionalStencil transposed(const FractionalStencil& s) {
    FractionalStencil t = s;
    t.direction = s.direction == Direction::forward ? Direction::backward : Direction::forward;
    return t;
}

std::vector<double> apply_forward(const FractionalStencil& s, std::span<const double> f) {
    check_len(s, f);
    if (s.direction != Direction::forward) throw ParameterError("apply_forward needs a forward stencil");
    if (s.order == 0.0) return {f.begin(), f.end()};
    const std::size_t n = f.size();
    const auto& w = s.weights;
    std::vector<double> out(n, 0.0);
    if (s.kind == StencilKind::caputo_derivative) {
        for (std::size_t i = 1; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < i; ++k) acc += w[k] * (f[i - k] - f[i - k - 1]);
            out[i] = acc;
        }
        return out;
    }
    const std::size_t s0 = s.start_offset();
    for (std::size_t i = s0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k + s0 <= i; ++k) acc += w[k] * f[i - k];
        out[i] = acc;
    }
    return out;
}

std::vector<double> apply_backward(const FractionalStencil& s, std::span<const double> f) {
    check_len(s, f);
    if (s.direction != Direction::backward) throw ParameterError("apply_backward needs a backward stencil");
    if (s.order == 0.0) return {f.begin(), f.end()};
    const std::size_t n = f.size();
    const auto& w = s.weights;
    std::vector<double> out(n, 0.0);
    if (s.kind == StencilKind::caputo_derivative) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; i + k + 1 < n; ++k) acc += w[k] * (f[i + k] - f[i + k + 1]);
            out[i] = acc;
        }
        return out;
    }
    const std::size_t s0 = s.start_offset();
    for (std::size_t i = 0; i + s0 < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; i + k + s0 < n; ++k) acc += w[k] * f[i + k];
        out[i] = acc;
    }
    return out;
}

std::vector<double> apply(const FractionalStencil& s, std::span<const double> f) {
    return s.direction == Direction::forward ? apply_forward(s, f) : apply_backward(s, f);
}

std::vector<double> dense_matrix(const FractionalStencil& s) {
    const std::size_t n = s.n_nodes();
    std::vector<double> m(n * n, 0.0), e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        auto col = apply(s, e);
        for (std::size_t i = 0; i < n; ++i) m[i * n + j] = col[i];
        e[j] = 0.0;
    }
    return m;
}

std::vector<double> regularized_caputo(const FractionalStencil& rl, std::span<const double> f,
                                       double boundary_value) {
    if (rl.kind != StencilKind::rl_derivative)
        throw ParameterError("regularized_caputo needs an rl_derivative stencil");
    // D(f - c) rather than D f - c D 1, so constants give exactly zero
    std::vector<double> g(f.begin(), f.end());
    for (double& v : g) v -= boundary_value;
    return apply(rl, g);
}

double power_rule(StencilKind kind, double order, double p, double t) {
    if (kind == StencilKind::rl_integral)
        return std::tgamma(p + 1.0) * rgamma(p + 1.0 + order) * std::pow(t, p + order);
    if (kind == StencilKind::caputo_derivative && p == 0.0) return 0.0;
    return std::tgamma(p + 1.0) * rgamma(p + 1.0 - order) * std::pow(t, p - order);
}

}  // namespace fracmfg
