#include "linalg.hpp"

#include <cmath>

#include "fracmfg/errors.hpp"

namespace fracmfg::detail {

namespace {

std::vector<double> thomas(const std::vector<double>& a, const std::vector<double>& b,
                           const std::vector<double>& c, std::vector<double> d) {
    const std::size_t n = b.size();
    std::vector<double> cp(n);
    double den = b[0];
    if (den == 0.0) throw NumericalError("singular tridiagonal system");
    cp[0] = c[0] / den;
    d[0] /= den;
    for (std::size_t i = 1; i < n; ++i) {
        den = b[i] - a[i] * cp[i - 1];
        if (den == 0.0 || !std::isfinite(den)) throw NumericalError("singular tridiagonal system");
        cp[i] = c[i] / den;
        d[i] = (d[i] - a[i] * d[i - 1]) / den;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= cp[i] * d[i + 1];
    return d;
}

}  // namespace

std::vector<double> solve_cyclic(const std::vector<double>& lo, const std::vector<double>& di,
                                 const std::vector<double>& up, const std::vector<double>& rhs) {
    const std::size_t n = di.size();
    if (n < 3) throw ParameterError("cyclic solve needs n >= 3");
    const double alpha = up[n - 1];  // row n-1, column 0
    const double beta = lo[0];       // row 0, column n-1
    const double gamma = -di[0];
    std::vector<double> b = di;
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    std::vector<double> a = lo, c = up;
    a[0] = 0.0;
    c[n - 1] = 0.0;
    auto x = thomas(a, b, c, rhs);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    auto z = thomas(a, b, c, u);
    double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
    for (double v : x)
        if (!std::isfinite(v)) throw NumericalError("cyclic solve produced a non-finite value");
    return x;
}

}  // namespace fracmfg::detail
