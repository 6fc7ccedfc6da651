#include "scalefn/series.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "scalefn/grid_calculus.hpp"

namespace scalefn {

double series_weight(const WeightRule& rule, int n) {
    if (const auto* g = std::get_if<GeometricWeights>(&rule)) return std::pow(g->base, -(n + 1.0));
    const auto& w = std::get<std::vector<double>>(rule);
    return n < static_cast<int>(w.size()) ? w[static_cast<std::size_t>(n)] : 0.0;
}

SeriesMonitor::SeriesMonitor(double tolerance, int max_terms) : tol_(tolerance), max_terms_(max_terms) {
    if (!(tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "series tolerance must be positive");
    if (max_terms < 1) throw Error(ErrorKind::InvalidArgument, "max_terms must be at least 1");
}

bool SeriesMonitor::record(double t) {
    if (!norms_.empty() && t < norms_.back()) ++decreases_;
    else decreases_ = 0;
    norms_.push_back(t);
    if (t == 0.0) return true;
    return t <= tol_ && decreases_ >= 3;
}

double SeriesMonitor::tail_ratio() const {
    if (norms_.size() < 2 || norms_[norms_.size() - 2] == 0.0) return 0.0;
    return norms_.back() / norms_[norms_.size() - 2];
}

double SeriesMonitor::tail_l1() const {
    if (norms_.empty() || norms_.back() == 0.0) return 0.0;
    double r = tail_ratio();
    if (!(r < 1.0)) return std::numeric_limits<double>::infinity();
    return norms_.back() * r / (1.0 - r);
}

SeriesReport SeriesMonitor::report(bool converged, double tail_bound) const {
    SeriesReport rep;
    // a vanishing last term contributed nothing
    bool zero_tail = !norms_.empty() && norms_.back() == 0.0;
    rep.terms_used = static_cast<int>(norms_.size()) + (zero_tail ? 0 : 1);
    rep.last_term_l1 = norms_.empty() ? 0.0 : norms_.back();
    rep.tail_bound = tail_bound;
    rep.converged = converged;
    rep.term_l1 = norms_;
    return rep;
}

SeriesNotConverged::SeriesNotConverged(const std::string& detail, SeriesResult partial)
    : Error(ErrorKind::NotConverged, detail), partial_(std::move(partial)) {}

SeriesResult convolution_series(const SeriesSpec& spec) {
    const GridFunction& f = spec.term;
    if (spec.kernel && !(spec.kernel->grid() == f.grid()))
        throw Error(ErrorKind::GridMismatch, "series kernel and term live on different grids");
    double kernel_l1 = spec.kernel ? l1_norm(*spec.kernel) : 1.0;
    double kernel_sup = spec.kernel ? sup_norm(*spec.kernel) : 1.0;
    double tol = spec.tolerance > 0.0 ? spec.tolerance : 1e-10 * std::max(1.0, kernel_l1);
    SeriesMonitor mon(tol, spec.max_terms);

    const std::size_t explicit_len = std::holds_alternative<std::vector<double>>(spec.weights)
                                         ? std::get<std::vector<double>>(spec.weights).size()
                                         : std::numeric_limits<std::size_t>::max();

    // S = sum_{n>=1} w_n f^(*n); the n = 0 term is added symbolically
    GridFunction sum = GridFunction::zero(f.grid(), f.exponent());
    GridFunction power = f;
    GridFunction last_term = GridFunction::zero(f.grid());
    bool converged = false;
    for (int n = 1;; ++n) {
        if (static_cast<std::size_t>(n) >= explicit_len) {
            converged = true;  // finite weight sequence: the sum is exact
            break;
        }
        if (n > 1) power = convolve(power, f);
        double w = series_weight(spec.weights, n);
        GridFunction term = power.scaled(w);
        double t = l1_norm(term);
        if (!std::isfinite(t))
            throw Error(ErrorKind::NotConverged, "series term " + std::to_string(n) + " is not finite");
        sum = sum + term;
        last_term = term;
        if (spec.on_term) spec.on_term(n, term);
        if (mon.record(t)) {
            converged = true;
            break;
        }
        if (mon.exhausted()) break;
    }

    double w0 = series_weight(spec.weights, 0);
    SeriesResult out;
    if (spec.kernel) {
        GridFunction body = sum.is_zero() ? GridFunction::zero(f.grid(), spec.kernel->exponent())
                                          : convolve(*spec.kernel, sum);
        out.sum = combine(w0, *spec.kernel, 1.0, body);
        out.origin_value = w0 * spec.kernel->boundary_value() + (body.exponent() > 0.0 ? 0.0 : body.boundary_value());
    } else {
        out.sum = sum;
        out.origin_atom = w0;
        out.origin_value = sum.exponent() > 0.0 ? 0.0 : sum.boundary_value();
    }

    // |kernel * R| <= min(sup|k| ||R||_1, ||k||_1 sup|R|), R extrapolated geometrically
    double tail_l1 = mon.tail_l1();
    double tail_bound = 0.0;
    if (tail_l1 > 0.0) {
        double r = mon.tail_ratio();
        double tail_sup = r < 1.0 ? sup_norm(last_term) * r / (1.0 - r) : std::numeric_limits<double>::infinity();
        tail_bound = std::min(kernel_sup * tail_l1, kernel_l1 * tail_sup);
    }
    out.report = mon.report(converged, tail_bound);
    if (!converged)
        throw SeriesNotConverged("series did not reach tolerance " + format_real(tol) + " within " +
                                     std::to_string(spec.max_terms) + " terms (last term " +
                                     format_real(out.report.last_term_l1) + ")",
                                 out);
    return out;
}

}  // namespace scalefn
