#pragma once

#include <optional>
#include <span>
#include <variant>

#include "scalefn/grid.hpp"
#include "scalefn/levy_model.hpp"
#include "scalefn/series.hpp"

namespace scalefn {

enum class ResolventMethod { DirectVolterra, Compensated, ClosedForm };

struct ResolventResult {
    GridFunction rho;
    GridFunction residual;  // rho * kernel - 1
    double max_residual = 0.0;  // over [3h, x_max]
    ResolventMethod method = ResolventMethod::DirectVolterra;
};

/// Solves rho * k = 1 for a first-kind kernel k = x^s r(x) with s in (-1, 0).
///
/// rho is written with exponent -(1 + s) so that the convolution exponent is
/// 0. The equation is collocated at the cell ends (j+1)h with rho piecewise
/// constant and the singular weights integrated exactly, then solved by
/// forward substitution. Throws SingularSystem when the implied exponent is
/// not above -1 (e.g. a bounded kernel has no locally integrable resolvent)
/// and NotPositive when a solved value is not positive.
ResolventResult solve_resolvent(const GridFunction& kernel,
                                std::optional<double> expected_exponent = std::nullopt);

/// Same discretisation without the positivity contract; used for renewal
/// kernels of either sign.
GridFunction solve_first_kind(const GridFunction& kernel, std::optional<double> expected_exponent = std::nullopt);

/// rho = W'(compensated model), the zero-mean model's 0-scale derivative.
ResolventResult resolvent_via_compensated(const LevyModel& model, const Grid& grid);

/// x^(alpha-2) / Gamma(alpha-1), the resolvent of the stable nu-bar-bar.
ResolventResult stable_resolvent(double alpha, const Grid& grid);

/// max |rho * kernel - 1| over [3h, x_max] and the residual function.
std::pair<GridFunction, double> resolvent_residual(const GridFunction& rho, const GridFunction& kernel);

/// True iff log(tail) is convex in x along the samples (second divided
/// differences, slack 1e-9). Advisory only.
bool check_log_convexity(std::span<const double> x, std::span<const double> tail);

// Renewal equations f = 1 + g * f'.

struct ViaResolvent {};
struct ViaKernelH {
    GridFunction h;
};
using RenewalVariant = std::variant<ViaResolvent, ViaKernelH>;

/// Which sign bookkeeping produced the answer: the one re-derived from the
/// transform identity, or the series as printed in the literature.
enum class RenewalSign { Derived, Printed };

struct RenewalOptions {
    double tolerance = 0.0;
    int max_terms = 200;
    double kernel_tolerance = 5e-2;
};

struct RenewalResult {
    GridFunction f;
    GridFunction derivative;  // f' as produced by the series (no numerical differencing)
    double residual = 0.0;    // sup |f - 1 - g * f'| over [5h, x_max]
    RenewalSign sign = RenewalSign::Derived;
    double other_residual = 0.0;  // the rejected sign convention (inf if it failed)
    SeriesReport report;
};

RenewalResult solve_renewal(const GridFunction& g, const RenewalVariant& variant, const RenewalOptions& options = {});

/// sup |f - 1 - g * f'| over [5h, x_max].
double renewal_residual(const GridFunction& g, const GridFunction& f, const GridFunction& df);

}  // namespace scalefn
