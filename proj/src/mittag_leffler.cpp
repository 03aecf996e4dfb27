#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fracmfg/errors.hpp"
#include "fracmfg/fracops.hpp"

namespace fracmfg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTarget = 1e-13;

double rgamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    return 1.0 / boost::math::tgamma(x);
}

std::string describe(double a, double g, double z) {
    return "E_{" + std::to_string(a) + "," + std::to_string(g) + "}(" + std::to_string(z) + ")";
}

// Power series; terms are formed in log space so large positive z does not overflow early.
double series(double a, double g, double z) {
    if (z == 0.0) return rgamma(g);
    const double lz = std::log(std::abs(z));
    double sum = rgamma(g);
    double peak = std::abs(sum);
    for (int k = 1; k < 100000; ++k) {
        double arg = a * k + g;
        double lt = k * lz - boost::math::lgamma(arg);
        if (lt > 700.0) throw NumericalError("overflow in " + describe(a, g, z));
        double term = std::exp(lt);
        if (z < 0.0 && (k % 2)) term = -term;
        sum += term;
        peak = std::max(peak, std::abs(term));
        // past the largest term the tail is bounded by a geometric-like decay
        if (k * lz < boost::math::lgamma(arg) && std::abs(term) <= 1e-17 * std::abs(sum)) {
            if (peak > 1e3 * std::abs(sum) && z < 0.0)
                throw NumericalError("series cancellation too large for " + describe(a, g, z));
            return sum;
        }
    }
    throw NumericalError("series did not converge for " + describe(a, g, z));
}

// Real-line integral representation, valid for 0 < a < 1, g < 1 + a and z < 0.
double integral(double a, double g, double z) {
    const double c = std::cos(a * kPi);
    const double s1 = std::sin(kPi * (1.0 - g));
    const double s2 = std::sin(kPi * (1.0 - g + a));
    const double ex = (1.0 - g) / a;
    auto K = [&](double r) {
        if (r <= 0.0) return 0.0;
        double num = r * s1 - z * s2;
        double den = r * r - 2.0 * r * z * c + z * z;
        return std::exp(ex * std::log(r) - std::pow(r, 1.0 / a)) * num / den;
    };
    // split at the denominator minimum when it sits on the positive axis, and near the
    // decay scale of exp(-r^{1/a})
    double split = 1.0;
    double peak = z * c;
    if (peak > split) split = peak;

    boost::math::quadrature::tanh_sinh<double> ts(15);
    boost::math::quadrature::exp_sinh<double> es(12);
    double err1 = 0.0, err2 = 0.0, l1 = 0.0, l2 = 0.0;
    double head = 0.0, tail = 0.0;
    try {
        head = ts.integrate(K, 0.0, split, kTarget, &err1, &l1);
        tail = es.integrate([&](double r) { return K(r + split); }, kTarget, &err2, &l2);
    } catch (const std::exception& e) {
        throw NumericalError("quadrature failed for " + describe(a, g, z) + ": " + e.what());
    }
    double val = (head + tail) / (a * kPi);
    double abs_err = (err1 * l1 + err2 * l2) / (a * kPi);
    if (!std::isfinite(val) || abs_err > 1e-11 * std::abs(val))
        throw NumericalError("quadrature failed for " + describe(a, g, z));
    return val;
}

// Algebraic asymptotic series for large negative z; returns NaN when the
// smallest term is not small enough to certify the target accuracy.
double asymptotic(double a, double g, double z) {
    // Complex poles of the integrand leave a term of size exp(|z|^{1/a} cos(pi/a)) that the
    // algebraic series does not see; it is only known to vanish for a <= 1/2.
    double pole_term = 0.0;
    if (a > 0.5) {
        double cpa = std::cos(kPi / a);
        if (cpa >= 0.0) return std::numeric_limits<double>::quiet_NaN();
        pole_term = std::exp(std::pow(-z, 1.0 / a) * cpa + std::abs((1.0 - g) / a * std::log(-z))) / a;
    }
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 200; ++k) {
        double term = -std::pow(z, -k) * rgamma(g - a * k);
        sum += term;
        double m = std::abs(term);
        if (m != 0.0 && m <= 1e-17 * std::abs(sum)) {
            if (pole_term > 1e-15 * std::abs(sum)) break;
            return sum;
        }
        if (m > prev && m != 0.0) break;
        if (m != 0.0) prev = m;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double evaluate(double a, double g, double z) {
    if (z == 0.0) return rgamma(g);
    if (a == 1.0) {
        if (g == 1.0) return std::exp(z);
        if (g == 2.0) return std::expm1(z) / z;
        if (z > -5.0) return series(a, g, z);
        throw NumericalError("unsupported parameters " + describe(a, g, z));
    }
    if (z > 0.0 || z >= -1.0) return series(a, g, z);
    // reduce gamma into the range of the integral representation
    if (g >= 1.0 + a) return (evaluate(a, g - a, z) - rgamma(g - a)) / z;
    if (z <= -10.0) {
        double v = asymptotic(a, g, z);
        if (std::isfinite(v)) return v;
    }
    return integral(a, g, z);
}

}  // namespace

double mittag_leffler(double alpha, double gamma, double z) {
    require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0,
            "Mittag-Leffler alpha must lie in (0,1]");
    require(std::isfinite(gamma) && gamma > 0.0, "Mittag-Leffler gamma must be positive");
    require(std::isfinite(z), "Mittag-Leffler argument must be finite");
    return evaluate(alpha, gamma, z);
}

double mittag_leffler(const MittagLefflerParams& p) { return mittag_leffler(p.alpha, p.gamma, p.z); }

}  // namespace fracmfg
