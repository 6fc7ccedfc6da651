#include "scalefn/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scalefn/errors.hpp"

namespace scalefn {

Grid::Grid(double step_, std::size_t count_) : step(step_), count(count_) {
    if (!(step > 0.0) || !std::isfinite(step))
        throw Error(ErrorKind::InvalidArgument, "grid step must be positive and finite");
    if (count < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least two cells");
}

Grid Grid::covering(double step, double x_max) {
    if (!(step > 0.0) || !(x_max > 0.0) || !std::isfinite(x_max))
        throw Error(ErrorKind::InvalidArgument, "grid needs positive step and x_max");
    // tolerate x_max / step landing a hair above an integer
    double cells = std::ceil(x_max / step - 1e-9);
    return Grid(step, static_cast<std::size_t>(std::max(2.0, cells)));
}

std::vector<double> Grid::nodes() const {
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j) out[j] = node(j);
    return out;
}

double power_integral(double lo, double hi, double s) {
    if (hi <= lo) return 0.0;
    double p = s + 1.0;
    if (lo == 0.0) return std::pow(hi, p) / p;
    // expm1/log1p keeps thin cells far from the origin accurate
    if (p == 0.0) return std::log1p((hi - lo) / lo);
    return std::pow(lo, p) * std::expm1(p * std::log1p((hi - lo) / lo)) / p;
}

GridFunction::GridFunction(Grid grid, std::vector<double> regular, double exponent)
    : grid_(grid), regular_(std::move(regular)), exponent_(exponent) {
    if (regular_.size() != grid_.count)
        throw Error(ErrorKind::GridMismatch, "regular factor length does not match grid");
    if (!(exponent_ > -1.0) || !std::isfinite(exponent_))
        throw Error(ErrorKind::InvalidArgument, "origin exponent must exceed -1");
    for (double v : regular_)
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite sample");
}

GridFunction GridFunction::zero(Grid grid, double exponent) {
    return GridFunction(grid, std::vector<double>(grid.count, 0.0), exponent);
}

GridFunction GridFunction::constant(Grid grid, double c) {
    return GridFunction(grid, std::vector<double>(grid.count, c), 0.0);
}

GridFunction GridFunction::power(Grid grid, double exponent, double coefficient) {
    return GridFunction(grid, std::vector<double>(grid.count, coefficient), exponent);
}

GridFunction GridFunction::sample(Grid grid, const std::function<double(double)>& regular,
                                  double exponent) {
    std::vector<double> r(grid.count);
    for (std::size_t j = 0; j < grid.count; ++j) r[j] = regular(grid.node(j));
    return GridFunction(grid, std::move(r), exponent);
}

double GridFunction::value(std::size_t j) const {
    double r = regular_.at(j);
    if (exponent_ == 0.0) return r;
    return std::pow(grid_.node(j), exponent_) * r;
}

std::vector<double> GridFunction::values() const {
    std::vector<double> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = value(j);
    return out;
}

double GridFunction::regular_at(double x) const {
    if (regular_.empty()) return 0.0;
    double h = grid_.step;
    double t = x / h - 0.5;
    auto last = static_cast<double>(regular_.size() - 1);
    // linear through the end segments, then held constant half a cell beyond
    t = std::clamp(t, -0.5, last + 0.5);
    std::size_t j = t <= 0.0 ? 0 : std::min(static_cast<std::size_t>(t), regular_.size() - 2);
    double w = t - static_cast<double>(j);
    return (1.0 - w) * regular_[j] + w * regular_[j + 1];
}

double GridFunction::operator()(double x) const {
    if (!(x > 0.0)) throw Error(ErrorKind::InvalidArgument, "evaluation point must be positive");
    double r = regular_at(x);
    return exponent_ == 0.0 ? r : std::pow(x, exponent_) * r;
}

double GridFunction::boundary_value() const {
    if (exponent_ > 0.0) return 0.0;
    double r0 = regular_.front();
    if (regular_.size() > 1) r0 = 1.5 * regular_[0] - 0.5 * regular_[1];
    if (exponent_ == 0.0) return r0;
    if (r0 == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), r0);
}

GridFunction GridFunction::with_exponent(double s) const {
    if (s == exponent_) return *this;
    std::vector<double> r(size());
    double d = exponent_ - s;
    for (std::size_t j = 0; j < size(); ++j) r[j] = regular_[j] * std::pow(grid_.node(j), d);
    return GridFunction(grid_, std::move(r), s);
}

GridFunction GridFunction::scaled(double c) const {
    std::vector<double> r(regular_);
    for (double& v : r) v *= c;
    return GridFunction(grid_, std::move(r), exponent_);
}

GridFunction GridFunction::multiplied(const std::function<double(double)>& m) const {
    std::vector<double> r(regular_);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] *= m(grid_.node(j));
    return GridFunction(grid_, std::move(r), exponent_);
}

GridFunction GridFunction::truncated(std::size_t count) const {
    if (count < 2 || count > size())
        throw Error(ErrorKind::InvalidArgument, "truncation length out of range");
    std::vector<double> r(regular_.begin(), regular_.begin() + static_cast<std::ptrdiff_t>(count));
    return GridFunction(Grid(grid_.step, count), std::move(r), exponent_);
}

bool GridFunction::is_zero() const noexcept {
    return std::all_of(regular_.begin(), regular_.end(), [](double v) { return v == 0.0; });
}

GridFunction combine(double a, const GridFunction& f, double b, const GridFunction& g) {
    if (!(f.grid() == g.grid())) throw Error(ErrorKind::GridMismatch, "combine on different grids");
    double s = std::min(f.exponent(), g.exponent());
    // a zero operand should not drag the exponent down
    if (a == 0.0 || f.is_zero()) s = g.exponent();
    else if (b == 0.0 || g.is_zero()) s = f.exponent();
    GridFunction fs = f.with_exponent(s), gs = g.with_exponent(s);
    std::vector<double> r(fs.size());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = a * fs.regular()[j] + b * gs.regular()[j];
    return GridFunction(f.grid(), std::move(r), s);
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) { return combine(1.0, a, 1.0, b); }
GridFunction operator-(const GridFunction& a, const GridFunction& b) { return combine(1.0, a, -1.0, b); }

}  // namespace scalefn
