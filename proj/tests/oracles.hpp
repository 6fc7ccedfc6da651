#pragma once

// Reference values computed without the library's grid machinery: adaptive
// quadrature, closed forms, and brute-force summation. Tests compare against
// these, never against the library itself.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

using Fn = std::function<double(double)>;

/// int_0^x f(x - y) g(y) dy by tanh-sinh, which tolerates endpoint
/// singularities of both factors.
inline double convolution(const Fn& f, const Fn& g, double x) {
    boost::math::quadrature::tanh_sinh<double> q;
    // (t, tc): tc is the distance to the nearer endpoint, which keeps x - y
    // accurate where f is singular
    auto integrand = [&](double y, double yc) {
        double rest = y > 0.5 * x ? yc : x - y;
        if (rest <= 0.0 || y <= 0.0) return 0.0;
        return f(rest) * g(y);
    };
    return q.integrate(integrand, 0.0, x);
}

/// int_a^b f
inline double integrate(const Fn& f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> q;
    return q.integrate(f, a, b);
}

/// int_0^inf e^{-beta x} f(x) dx
inline double laplace(const Fn& f, double beta) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double x) { return std::exp(-beta * x) * f(x); }, 0.0,
                       std::numeric_limits<double>::infinity());
}

/// x^{a+b+1} B(a+1, b+1): the convolution of x^a with x^b.
inline double power_convolution(double a, double b, double x) {
    return std::pow(x, a + b + 1.0) * std::beta(a + 1.0, b + 1.0);
}

/// Riemann-Liouville integral of x^nu of order mu.
inline double power_frac_integral(double nu, double mu, double x) {
    return std::tgamma(nu + 1.0) / std::tgamma(nu + 1.0 + mu) * std::pow(x, nu + mu);
}

/// Mittag-Leffler E_{alpha,beta}(z) by direct summation in long double.
inline double mittag_leffler(double alpha, double beta, double z) {
    long double sum = 0.0L;
    for (int k = 0; k < 2000; ++k) {
        long double t = std::pow(static_cast<long double>(z), k) /
                        std::tgamma(static_cast<long double>(alpha) * k + beta);
        sum += t;
        if (k > 5 && std::fabs(t) < 1e-19L * std::fabs(sum)) break;
    }
    return static_cast<double>(sum);
}

/// d/dz E_{alpha,1}(z), summed term by term.
inline double mittag_leffler_derivative(double alpha, double z) {
    long double sum = 0.0L;
    for (int k = 1; k < 2000; ++k) {
        long double t = k * std::pow(static_cast<long double>(z), k - 1) /
                        std::tgamma(static_cast<long double>(alpha) * k + 1.0L);
        sum += t;
        if (k > 5 && std::fabs(t) < 1e-19L * std::fabs(sum)) break;
    }
    return static_cast<double>(sum);
}

/// psi(beta) = c beta + sigma2 beta^2 + int (e^{-beta y} - 1 + beta y 1{y<1}) density(y) dy
/// straight from the Levy-Khintchine formula.
inline double levy_khintchine(double c, double sigma2, const Fn& density, double beta) {
    boost::math::quadrature::tanh_sinh<double> near;
    boost::math::quadrature::exp_sinh<double> far;
    double a = near.integrate(
        [&](double y) {
            double t = beta * y;
            // e^{-t} - 1 + t without cancellation for small t
            double num = t < 0.1 ? t * t * (0.5 - t / 6.0 * (1.0 - t / 4.0 * (1.0 - t / 5.0 * (1.0 - t / 6.0 * (1.0 - t / 7.0)))))
                                 : std::expm1(-t) + t;
            // tanh-sinh probes points so close to 0 that the density overflows;
            // the integrand vanishes there
            double r = y <= 0.0 ? 0.0 : num * density(y);
            return std::isfinite(r) ? r : 0.0;
        },
        0.0, 1.0);
    double b = far.integrate([&](double y) { return std::expm1(-beta * y) * density(y); }, 1.0,
                             std::numeric_limits<double>::infinity());
    return c * beta + sigma2 * beta * beta + a + b;
}

/// int_x^inf f
inline double integrate_from(const Fn& f, double x) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate(f, x, std::numeric_limits<double>::infinity());
}

/// n-fold convolution of a pmf on {0, 1, ...}, by direct summation.
inline std::vector<double> pmf_power(const std::vector<double>& p, int n, std::size_t len) {
    std::vector<double> out(len, 0.0);
    out[0] = 1.0;
    for (int k = 0; k < n; ++k) {
        std::vector<double> next(len, 0.0);
        for (std::size_t i = 0; i < len; ++i)
            for (std::size_t j = 0; j < p.size() && i + j < len; ++j) next[i + j] += out[i] * p[j];
        out = std::move(next);
    }
    return out;
}

}  // namespace oracle
