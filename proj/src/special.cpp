#include "scalefn/special.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "scalefn/errors.hpp"
#include "scalefn/grid.hpp"

namespace scalefn {

namespace {

// Gamma(a, x) = e^{-x} x^a / (x + 1 - a - 1(1-a)/(x + 3 - a - ...)), modified Lentz
double upper_gamma_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x)) * h;
}

}  // namespace

double upper_gamma(double a, double x) {
    if (!(x > 0.0)) throw Error(ErrorKind::InvalidArgument, "upper_gamma needs x > 0");
    if (a > 0.0) return boost::math::tgamma(a, x);
    if (x >= 1.5) return upper_gamma_cf(a, x);
    // step down from a positive parameter (or from Gamma(0, x) = E_1(x)) via
    // Gamma(p, x) = (Gamma(p+1, x) - x^p e^{-x}) / p
    double top, g;
    if (a == std::floor(a)) {
        top = 0.0;
        g = boost::math::expint(1, x);
    } else {
        top = a + std::ceil(-a);
        g = boost::math::tgamma(top, x);
    }
    for (double p = top - 1.0; p >= a - 0.5; p -= 1.0) g = (g - std::exp(p * std::log(x) - x)) / p;
    return g;
}

double mittag_leffler(double alpha, double y) {
    if (y == 0.0) return 1.0;
    // closed forms avoid cancellation in the alternating series
    if (alpha == 1.0) return std::exp(y);
    if (alpha == 0.5) return std::exp(y * y) * std::erfc(-y);
    double sum = 0.0, ly = std::log(std::abs(y));
    for (int k = 0; k < 100000; ++k) {
        double mag = std::exp(k * ly - std::lgamma(1.0 + alpha * k));
        double term = (y < 0.0 && (k & 1)) ? -mag : mag;
        sum += term;
        // terms eventually decrease monotonically once alpha k > |y|^(1/alpha)
        if (k > 2 && mag < 1e-16 * std::abs(sum) && alpha * k > std::pow(std::abs(y), 1.0 / alpha)) break;
    }
    return sum;
}

double mittag_leffler_derivative(double alpha, double y) {
    if (y == 0.0) return 1.0 / std::tgamma(1.0 + alpha);
    double sum = 0.0, ly = std::log(std::abs(y));
    for (int k = 1; k < 100000; ++k) {
        double mag = k * std::exp((k - 1) * ly - std::lgamma(1.0 + alpha * k));
        double term = (y < 0.0 && ((k - 1) & 1)) ? -mag : mag;
        sum += term;
        if (k > 2 && mag < 1e-16 * std::abs(sum) && alpha * k > std::pow(std::abs(y), 1.0 / alpha)) break;
    }
    return sum;
}

double exp_moment(double lo, double hi, double s, double beta) {
    if (hi <= lo) return 0.0;
    if (beta == 0.0) return power_integral(lo, hi, s);
    if (s == 0.0) return std::exp(-beta * lo) * -std::expm1(-beta * (hi - lo)) / beta;
    if (lo == 0.0) {
        double p = s + 1.0;
        return boost::math::tgamma_lower(p, beta * hi) / std::pow(beta, p);
    }
    return boost::math::quadrature::gauss<double, 8>::integrate(
        [&](double x) { return std::pow(x, s) * std::exp(-beta * x); }, lo, hi);
}

}  // namespace scalefn
