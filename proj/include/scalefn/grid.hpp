#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace scalefn {

/// Uniform cell grid on [0, x_max]. Samples live at cell midpoints
/// x_j = (j + 1/2) h, so no node ever sits on the origin.
struct Grid {
    double step = 0.0;
    std::size_t count = 0;

    Grid() = default;
    Grid(double step, std::size_t count);

    /// Smallest grid with the given step that reaches x_max.
    static Grid covering(double step, double x_max);

    double node(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * step; }
    double x_max() const noexcept { return static_cast<double>(count) * step; }
    double cell_lo(std::size_t j) const noexcept { return static_cast<double>(j) * step; }
    double cell_hi(std::size_t j) const noexcept { return static_cast<double>(j + 1) * step; }
    std::vector<double> nodes() const;

    bool operator==(const Grid&) const = default;
};

/// f(x) = x^s * r(x) sampled on a Grid.
///
/// `regular()` holds r at the midpoints; inside each cell the regular factor is
/// treated as constant while x^s is integrated exactly. The origin exponent s is
/// declared by whoever builds the function and must satisfy s > -1 so that f is
/// locally integrable. Instances are immutable.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(Grid grid, std::vector<double> regular, double exponent = 0.0);

    static GridFunction zero(Grid grid, double exponent = 0.0);
    static GridFunction constant(Grid grid, double c);
    /// c * x^s with a constant regular factor.
    static GridFunction power(Grid grid, double exponent, double coefficient = 1.0);
    /// Regular factor taken from `regular(x)` at every node.
    static GridFunction sample(Grid grid, const std::function<double(double)>& regular,
                               double exponent = 0.0);

    const Grid& grid() const noexcept { return grid_; }
    double exponent() const noexcept { return exponent_; }
    std::span<const double> regular() const noexcept { return regular_; }
    std::size_t size() const noexcept { return regular_.size(); }
    double node(std::size_t j) const noexcept { return grid_.node(j); }

    /// f(x_j), i.e. x_j^s * r_j.
    double value(std::size_t j) const;
    std::vector<double> values() const;

    /// Evaluates f anywhere in (0, x_max]: exact x^s times the regular factor
    /// linearly interpolated between midpoints (extrapolated over the two
    /// outer half cells).
    double operator()(double x) const;
    double regular_at(double x) const;

    /// Limit at 0+: 0 for s > 0, the linearly extrapolated regular factor for
    /// s = 0, and +/-infinity for s < 0 (unless the regular factor vanishes).
    double boundary_value() const;

    /// Same function written with another exponent (regular factor rescaled).
    GridFunction with_exponent(double s) const;
    GridFunction scaled(double c) const;
    /// Multiplies f pointwise by m(x) evaluated at the nodes.
    GridFunction multiplied(const std::function<double(double)>& m) const;
    /// The function restricted to the first `count` cells.
    GridFunction truncated(std::size_t count) const;

    bool is_zero() const noexcept;

    friend GridFunction operator+(const GridFunction& a, const GridFunction& b);
    friend GridFunction operator-(const GridFunction& a, const GridFunction& b);
    friend GridFunction operator*(double c, const GridFunction& f) { return f.scaled(c); }
    friend GridFunction operator-(const GridFunction& f) { return f.scaled(-1.0); }

private:
    Grid grid_;
    std::vector<double> regular_;
    double exponent_ = 0.0;
};

/// Linear combination a*f + b*g written with the smaller of the two exponents.
GridFunction combine(double a, const GridFunction& f, double b, const GridFunction& g);

/// Integral of x^s over [lo, hi], 0 <= lo <= hi.
double power_integral(double lo, double hi, double s);

}  // namespace scalefn
