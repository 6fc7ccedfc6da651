#include "scalefn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace scalefn {

double LaplaceCheck::max_residual() const {
    return residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
}

LaplaceCheck verify_laplace_identity(const std::function<double(double)>& psi, double phi_q, double q,
                                     const GridFunction& W, double tolerance) {
    if (!(tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    const double x_max = W.grid().x_max();
    const double beta_min = phi_q + std::max(1.0, 5.0 / x_max * std::log(10.0 / tolerance));
    const double w_end = std::abs(W.value(W.size() - 1));

    LaplaceCheck out;
    out.tolerance = tolerance;
    constexpr int points = 8;
    bool ok = true;
    for (int i = 0; i < points; ++i) {
        double beta = beta_min * std::pow(10.0, static_cast<double>(i) / (points - 1));
        double gap = psi(beta) - q;
        double tail = w_end * std::exp(-beta * x_max) / (beta - phi_q);
        double bound = std::abs(gap) * tail;
        double r = std::abs(laplace_transform(W, beta) * gap - 1.0);
        out.betas.push_back(beta);
        out.residuals.push_back(r);
        out.truncation_bound = std::max(out.truncation_bound, bound);
        ok = ok && r < tolerance + bound;
    }
    if (out.truncation_bound > tolerance)
        throw Error(ErrorKind::DomainTooShort, "x_max = " + format_real(x_max) +
                                                   " leaves a Laplace tail bound of " +
                                                   format_real(out.truncation_bound));
    out.passed = ok;
    return out;
}

LaplaceCheck verify_scale(const LevyModel& model, double q, const ScaleTable& table, double tolerance) {
    return verify_laplace_identity([&](double b) { return model.psi(b); }, model.phi(q), q, table.W, tolerance);
}

namespace {

double net_profit_slope(const LevyModel& model) {
    if (model.classify() != Regime::BoundedVariation)
        throw Error(ErrorKind::RegimeMismatch, "ruin probability needs a bounded-variation model");
    const double slope = model.psi_derivative(0.0);
    if (!(slope > 0.0))
        throw Error(ErrorKind::NetProfitViolated, "psi'(0+) = " + format_real(slope) + " is not positive");
    return slope;
}

}  // namespace

GridFunction ruin_from_scale(const LevyModel& model, const ScaleTable& zero_scale) {
    const double slope = net_profit_slope(model);
    if (zero_scale.q != 0.0) throw Error(ErrorKind::InvalidArgument, "ruin needs the 0-scale function");
    const Grid& grid = zero_scale.grid;
    // far-tail discretisation error can dip a hair below 0
    std::vector<double> r(grid.count);
    for (std::size_t j = 0; j < grid.count; ++j) r[j] = std::clamp(1.0 - slope * zero_scale.W.value(j), 0.0, 1.0);
    return GridFunction(grid, std::move(r), 0.0);
}

GridFunction ruin_probability_on(const LevyModel& model, const Grid& grid, const ScaleOptions& options) {
    net_profit_slope(model);
    return ruin_from_scale(model, scale_bounded_variation(model, 0.0, grid, options));
}

double ruin_probability(const LevyModel& model, double x, double step) {
    if (!(x >= 0.0)) throw Error(ErrorKind::InvalidArgument, "x must be nonnegative");
    Grid grid = Grid::covering(step, std::max(x, 16.0 * step));
    GridFunction r = ruin_probability_on(model, grid);
    double v = x == 0.0 ? r.boundary_value() : r(x);
    return std::clamp(v, 0.0, 1.0);
}

int kappa_classifier(const GridFunction& f) {
    const Grid& g = f.grid();
    std::size_t below = 0;
    while (below < g.count && g.node(below) < 0.5) ++below;
    if (below < 16) throw Error(ErrorKind::InvalidArgument, "kappa needs at least 16 nodes in (0, 0.5)");
    // first decade above the low-confidence first cell: x_1 .. 10 x_1
    const double top = 10.0 * g.node(1);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t j = 1; j < g.count && g.node(j) <= top * (1.0 + 1e-12); ++j) {
        double v = std::abs(f.value(j));
        if (v == 0.0) continue;
        double lx = std::log(g.node(j)), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 2;
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return slope > -0.5 + 0.02 ? 2 : 1;
}

std::vector<double> brute_force_convolution_pmf(std::vector<double> pmf, int n) {
    if (n < 0) throw Error(ErrorKind::InvalidArgument, "n must be nonnegative");
    double tail = 0.0;
    while (!pmf.empty() && tail + pmf.back() < 1e-14) {
        tail += pmf.back();
        pmf.pop_back();
    }
    std::vector<double> out{1.0};
    for (int k = 0; k < n; ++k) {
        std::vector<double> next(out.size() + pmf.size() - 1, 0.0);
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = 0; j < pmf.size(); ++j) next[i + j] += out[i] * pmf[j];
        out = std::move(next);
    }
    return out;
}

std::vector<double> zero_truncated_poisson_pmf(double mu, double tail) {
    if (!(mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "mu must be positive");
    std::vector<double> p{0.0};
    const double norm = -std::expm1(-mu);
    double left = 1.0;
    for (int k = 1; left > tail && k < 100000; ++k) {
        double v = std::exp(k * std::log(mu) - std::lgamma(k + 1.0) - mu) / norm;
        p.push_back(v);
        left -= v;
    }
    return p;
}

std::vector<double> geometric_pmf(double p, double tail) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in (0, 1]");
    std::vector<double> out{0.0};
    double left = 1.0, v = p;
    while (left > tail && out.size() < 100000) {
        out.push_back(v);
        left -= v;
        v *= 1.0 - p;
    }
    return out;
}

}  // namespace scalefn
