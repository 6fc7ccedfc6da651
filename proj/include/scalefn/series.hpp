#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "scalefn/errors.hpp"
#include "scalefn/grid.hpp"

namespace scalefn {

/// w_n = 1 / base^(n+1).
struct GeometricWeights {
    double base = 1.0;
};

/// w_0, w_1, ...; the series is finite once the sequence runs out.
using WeightRule = std::variant<GeometricWeights, std::vector<double>>;

double series_weight(const WeightRule& rule, int n);

/// kernel * sum_n w_n f^(*n). A missing kernel stands for delta_0.
struct SeriesSpec {
    GridFunction term;
    WeightRule weights = GeometricWeights{};
    std::optional<GridFunction> kernel;
    double tolerance = 0.0;  // 0 selects 1e-10 * max(1, ||kernel||_1)
    int max_terms = 200;
    /// Sees every weighted term w_n f^(*n), n >= 1, before the kernel is applied.
    std::function<void(int, const GridFunction&)> on_term;
};

struct SeriesReport {
    int terms_used = 0;  // including the n = 0 term
    double last_term_l1 = 0.0;
    double tail_bound = 0.0;
    bool converged = false;
    std::vector<double> term_l1;  // ||w_n f^(*n)||_1 for n >= 1
};

struct SeriesResult {
    GridFunction sum;
    /// Weight of delta_0 left over when the kernel is delta_0 itself; it has no
    /// grid representation and is reported separately.
    double origin_atom = 0.0;
    /// sum(0+) taken term by term, where every exponent is known exactly.
    double origin_value = 0.0;
    SeriesReport report;
};

/// Stopping rule shared by every power series in the library: stop once the
/// term norm is at most eps and has decreased three times in a row, or is
/// exactly zero (all later powers vanish too).
class SeriesMonitor {
public:
    SeriesMonitor(double tolerance, int max_terms);

    /// Records ||term n|| for n = 1, 2, ...; true when the series may stop.
    bool record(double term_l1);
    bool exhausted() const noexcept { return static_cast<int>(norms_.size()) >= max_terms_; }

    /// Geometric extrapolation of the remaining L1 mass (infinite if the
    /// last ratio is not below 1).
    double tail_l1() const;
    double tail_ratio() const;

    SeriesReport report(bool converged, double tail_bound) const;
    double tolerance() const noexcept { return tol_; }

private:
    double tol_;
    int max_terms_;
    std::vector<double> norms_;
    int decreases_ = 0;
};

/// Thrown when max_terms is reached before the stopping rule fires; carries
/// the partial sum.
class SeriesNotConverged : public Error {
public:
    SeriesNotConverged(const std::string& detail, SeriesResult partial);
    const SeriesResult& partial() const noexcept { return partial_; }

private:
    SeriesResult partial_;
};

SeriesResult convolution_series(const SeriesSpec& spec);

}  // namespace scalefn
