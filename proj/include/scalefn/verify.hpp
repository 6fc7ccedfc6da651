#pragma once

#include <functional>
#include <vector>

#include "scalefn/grid_calculus.hpp"
#include "scalefn/levy_model.hpp"
#include "scalefn/scale_functions.hpp"

namespace scalefn {

// laplace_transform(f, beta) lives in grid_calculus and is the transform used here.

struct LaplaceCheck {
    std::vector<double> betas;
    std::vector<double> residuals;  // |L[W](beta) (psi(beta) - q) - 1|
    double truncation_bound = 0.0;  // largest |psi - q| * int_{x_max}^inf e^{-beta x} W bound
    double tolerance = 0.0;
    bool passed = false;

    double max_residual() const;
};

/// Checks L[W](beta) (psi(beta) - q) = 1 on a geometric beta grid in
/// [b, 10 b], b = Phi(q) + max(1, 5 / x_max log(10 / tol)). The tail beyond
/// x_max is bounded through W(x) <= W(x_max) e^{Phi(q)(x - x_max)}.
/// Throws DomainTooShort when that bound alone exceeds the tolerance.
LaplaceCheck verify_scale(const LevyModel& model, double q, const ScaleTable& table, double tolerance);

/// Same check for an exponent given as a callable (e.g. a perturbed model).
LaplaceCheck verify_laplace_identity(const std::function<double(double)>& psi, double phi_q, double q,
                                     const GridFunction& W, double tolerance);

/// 1 - psi'(0+) W(x) on the grid for a bounded-variation model, clamped to [0, 1].
/// Throws NetProfitViolated unless psi'(0+) > 0.
/// Same from an already computed 0-scale function of `model`.
GridFunction ruin_from_scale(const LevyModel& model, const ScaleTable& zero_scale);
GridFunction ruin_probability_on(const LevyModel& model, const Grid& grid, const ScaleOptions& options = {});
double ruin_probability(const LevyModel& model, double x, double step = 1.0 / 1024);

/// 2 if |f| grows at most like x^(-0.5 + margin) near 0 (slope of log|f|
/// against log x over the first decade of nodes above the first cell), else 1.
int kappa_classifier(const GridFunction& f);

/// n-fold convolution of a pmf on {0, 1, ...} by direct summation, after
/// dropping a trailing tail of mass below 1e-14.
std::vector<double> brute_force_convolution_pmf(std::vector<double> pmf, int n);

/// Zero-truncated Poisson and geometric (on {1, 2, ...}) laws, cut where the
/// remaining mass falls below `tail`.
std::vector<double> zero_truncated_poisson_pmf(double mu, double tail = 1e-14);
std::vector<double> geometric_pmf(double p, double tail = 1e-14);

}  // namespace scalefn
