#pragma once

namespace scalefn {

/// Upper incomplete gamma Gamma(a, x) for any real a and x > 0 (a <= 0 included).
double upper_gamma(double a, double x);

/// E_alpha(y) = sum_k y^k / Gamma(1 + alpha k).
double mittag_leffler(double alpha, double y);
/// d/dy E_alpha(y) = sum_k k y^(k-1) / Gamma(1 + alpha k).
double mittag_leffler_derivative(double alpha, double y);

/// Integral of x^s e^{-beta x} over [lo, hi]; beta may be zero.
double exp_moment(double lo, double hi, double s, double beta);

}  // namespace scalefn
