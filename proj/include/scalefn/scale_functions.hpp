#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "scalefn/grid.hpp"
#include "scalefn/grid_calculus.hpp"
#include "scalefn/levy_model.hpp"
#include "scalefn/series.hpp"
#include "scalefn/special.hpp"

namespace scalefn {

enum class ScaleMethod {
    SeriesGaussian,
    SeriesRoots,
    SeriesBoundedVariation,
    SeriesUnboundedVariation,
    ClosedBrownian,
    ClosedStable,
    Perturbation,
    Tilt,
};

std::string_view method_name(ScaleMethod m) noexcept;
/// Inverse of method_name; nullopt for unknown names.
std::optional<ScaleMethod> parse_method(std::string_view name);

struct ScaleOptions {
    double tolerance = 0.0;  // 0: the series default
    int max_terms = 200;
    /// Two-grid extrapolation 2 W_{h/2} - W_h, assuming first order in h.
    bool richardson = false;
    /// Splitting level z for the large-jump truncation. Used automatically
    /// (z = 1) when the mean is infinite; setting it forces the split.
    std::optional<double> truncation_level;
    /// Allowed |h * nu-bar-bar - 1| at x = 3h.
    double kernel_tolerance = 5e-2;
};

/// W^(q) on a grid with its provenance.
struct ScaleTable {
    std::string fingerprint;
    double q = 0.0;
    Grid grid;
    GridFunction W;
    Regime regime = Regime::Gaussian;
    SeriesReport report;
    ScaleMethod method = ScaleMethod::SeriesGaussian;
    /// W(0+) when the method knows it exactly (NaN: extrapolate from the grid).
    double origin = std::numeric_limits<double>::quiet_NaN();

    double operator()(double x) const { return W(x); }
    double origin_value() const { return std::isnan(origin) ? W.boundary_value() : origin; }
};

// Kernels h with h * nu-bar-bar (0+) = 1 for the unbounded-variation series.

/// nu-bar-bar ~ C x^(-gamma) at 0; h = sin(gamma pi) / (C pi) x^(gamma - 1).
struct PowerKernel {
    double C = 1.0;
    double gamma = 0.5;
};
struct ExplicitH {
    GridFunction h;
};
/// h = rho solved from rho * nu-bar-bar = 1.
struct ResolventKernel {};
/// h = W' of the zero-mean model.
struct CompensatedKernel {};
using KernelSpec = std::variant<PowerKernel, ExplicitH, ResolventKernel, CompensatedKernel>;

/// The power kernel read off the jump family (pure stable only); nullopt
/// otherwise. A power kernel for other families is exact only in the limit
/// x -> 0 and usually fails the check at 3h.
std::optional<PowerKernel> default_power_kernel(const LevyModel& model);

/// sigma2 > 0: W = id * sum f^(*n) / sigma2^(n+1) with f = -c'' + q x - nu-bar-bar,
/// or the truncated form when the mean is infinite.
ScaleTable scale_gaussian(const LevyModel& model, double q, const Grid& grid, const ScaleOptions& options = {});

/// sigma2 > 0, finite jump measure: expansion around the roots of
/// sigma2 b^2 + c' b - (q + ||nu||). Finite when the jumps stay away from 0.
ScaleTable scale_gaussian_roots(const LevyModel& model, double q, const Grid& grid,
                                const ScaleOptions& options = {});

/// Bounded variation: W = 1 * sum (q + nu-bar)^(*n) / c'^(n+1).
ScaleTable scale_bounded_variation(const LevyModel& model, double q, const Grid& grid,
                                   const ScaleOptions& options = {});

/// Unbounded variation, no Gaussian part: W = H * sum f^(*n) with H the
/// primitive of the kernel h. Without a spec the stable power kernel is used
/// for stable jumps and the numerically solved resolvent otherwise.
ScaleTable scale_unbounded_variation(const LevyModel& model, double q, const Grid& grid,
                                     const std::optional<KernelSpec>& kernel = std::nullopt,
                                     const ScaleOptions& options = {});

/// Roots of sigma2 b^2 + c b - q; x / sigma2 in the double-root case.
double scale_brownian_closed_form(double c, double sigma2, double q, double x);
/// alpha x^(alpha-1) E'_alpha(q x^alpha) for psi(beta) = beta^alpha.
double scale_stable_closed_form(double alpha, double q, double x);

/// Closed forms sampled on the grid (Brownian models and pure stable with c'' = 0).
ScaleTable scale_closed_form(const LevyModel& model, double q, const Grid& grid);

/// W^(q) = e^(Phi(q) x) W_Phi(q), the tilted 0-scale function taken from the
/// series of its regime.
ScaleTable tilt(const LevyModel& model, double q, const Grid& grid,
                const std::optional<KernelSpec>& kernel = std::nullopt, const ScaleOptions& options = {});

/// Scale function of L - C, C compound Poisson (rate lambda, law jumps with
/// mass 1): W_L^(q+lambda) * sum_k lambda^k (-jumps * W_L^(q+lambda))^(*k).
ScaleTable scale_with_cpp_perturbation(const std::function<ScaleTable(double)>& base, double lambda,
                                       const MixedDistribution& jumps, double q, const Grid& grid,
                                       const ScaleOptions& options = {});

/// P(xi_1 + ... + xi_n = k, all xi_i > 0) for iid Poisson(mu).
double ztp_mass(int k, int n, double mu);
/// n-fold convolution of the zero-truncated Poisson law at k.
double ztp_convolution_mass(int k, int n, double mu);

/// Picks the method (default: the series of the model's regime).
ScaleTable compute_scale(const LevyModel& model, double q, const Grid& grid,
                         std::optional<ScaleMethod> method = std::nullopt,
                         const std::optional<KernelSpec>& kernel = std::nullopt,
                         const ScaleOptions& options = {});

}  // namespace scalefn
