#include "scalefn/resolvent.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "scalefn/grid_calculus.hpp"
#include "scalefn/scale_functions.hpp"

namespace scalefn {

namespace {

constexpr std::size_t near = 8;

// Gauss-Legendre nodes and weights mapped to [0, 1]
struct UnitGauss4 {
    std::array<double, 4> t{}, w{};
    UnitGauss4() {
        const auto& a = boost::math::quadrature::gauss<double, 4>::abscissa();
        const auto& wt = boost::math::quadrature::gauss<double, 4>::weights();
        // abscissa() lists the nonnegative half: 2 points, each mirrored
        std::size_t k = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            t[k] = 0.5 * (1.0 - a[i]);
            w[k++] = 0.5 * wt[i];
            t[k] = 0.5 * (1.0 + a[i]);
            w[k++] = 0.5 * wt[i];
        }
    }
};

// int_j^{j+1} t^p (j+m+1-t)^q dt in units of h
double cell_weight(std::size_t j, std::size_t m, double p, double q) {
    const double a = p + 1.0, b = q + 1.0;
    if (j == 0) {
        double L = static_cast<double>(m + 1);
        return std::pow(L, p + q + 1.0) * boost::math::beta(a, b, 1.0 / L);
    }
    if (m == 0) {
        double L = static_cast<double>(j + 1);
        return std::pow(L, p + q + 1.0) * boost::math::betac(a, b, static_cast<double>(j) / L);
    }
    double lo = static_cast<double>(j), top = static_cast<double>(j + m + 1);
    auto integrand = [&](double t) { return std::pow(t, p) * std::pow(top - t, q); };
    return boost::math::quadrature::gauss<double, 20>::integrate(integrand, lo, lo + 1.0);
}

}  // namespace

GridFunction solve_first_kind(const GridFunction& kernel, std::optional<double> expected_exponent) {
    const Grid& g = kernel.grid();
    const std::size_t n = g.count;
    const double q = kernel.exponent();
    const double p = expected_exponent.value_or(-(1.0 + q));
    if (!(p > -1.0))
        throw Error(ErrorKind::SingularSystem, "resolvent exponent " + format_real(p) +
                                                   " is not above -1; the kernel has no integrable resolvent");
    const double scale = std::pow(g.step, p + q + 1.0);
    auto rk = kernel.regular();

    // exact weights next to either singular end
    std::vector<std::array<double, near>> left(n), right(n);  // left[m][j], right[j][m]
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < near; ++b) {
            left[a][b] = cell_weight(b, a, p, q);
            right[a][b] = cell_weight(a, b, p, q);
        }

    static const UnitGauss4 gl;
    std::vector<std::array<double, 4>> ta(n), tb(n);  // (j + t)^p, (m + 1 - t)^q
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t r = 0; r < 4; ++r) {
            ta[k][r] = std::pow(static_cast<double>(k) + gl.t[r], p);
            tb[k][r] = gl.w[r] * std::pow(static_cast<double>(k) + 1.0 - gl.t[r], q);
        }

    std::vector<double> rho(n, 0.0);
    std::vector<std::array<double, 4>> ra(n);  // rho_j (j + t)^p
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            std::size_t m = i - j;
            double w;
            if (j < near) w = left[m][j];
            else if (m < near) w = right[j][m];
            else {
                const auto& x = ra[j];
                const auto& y = tb[m];
                acc += rk[m] * (x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3]);
                continue;
            }
            acc += rk[m] * w * rho[j];
        }
        double diag = rk[0] * (i < near ? left[0][i] : right[i][0]) * scale;
        if (!std::isfinite(diag) || std::abs(diag) < 1e-300)
            throw Error(ErrorKind::SingularSystem, "vanishing diagonal weight at node " + std::to_string(i));
        rho[i] = (1.0 - acc * scale) / diag;
        for (std::size_t r = 0; r < 4; ++r) ra[i][r] = rho[i] * ta[i][r];
    }
    return GridFunction(g, std::move(rho), p);
}

std::pair<GridFunction, double> resolvent_residual(const GridFunction& rho, const GridFunction& kernel) {
    GridFunction res = convolve(rho, kernel) - GridFunction::constant(rho.grid(), 1.0);
    double worst = 0.0;
    for (std::size_t j = 0; j < res.size(); ++j)
        if (res.node(j) >= 3.0 * rho.grid().step) worst = std::max(worst, std::abs(res.value(j)));
    return {res, worst};
}

ResolventResult solve_resolvent(const GridFunction& kernel, std::optional<double> expected_exponent) {
    for (std::size_t j = 0; j < kernel.size(); ++j)
        if (!(kernel.value(j) > 0.0))
            throw Error(ErrorKind::InvalidArgument, "resolvent kernel must be positive");
    GridFunction rho = solve_first_kind(kernel, expected_exponent);
    for (std::size_t j = 0; j < rho.size(); ++j)
        if (!(rho.regular()[j] > 0.0))
            throw Error(ErrorKind::NotPositive, "resolvent value at x = " + format_real(rho.node(j)) +
                                                    " is not positive");
    auto [res, worst] = resolvent_residual(rho, kernel);
    return {rho, res, worst, ResolventMethod::DirectVolterra};
}

ResolventResult resolvent_via_compensated(const LevyModel& model, const Grid& grid) {
    if (model.classify() != Regime::UnboundedVariationNoGaussian)
        throw Error(ErrorKind::RegimeMismatch, "compensated resolvent needs unbounded variation without a Gaussian part");
    GridFunction kernel = model.integrated_tail_on(grid);
    LevyModel compensated(0.0, DriftConvention::CDoublePrime, 0.0, model.jumps());
    ScaleTable w = scale_unbounded_variation(compensated, 0.0, grid);
    GridFunction rho = derivative(w.W);
    auto [res, worst] = resolvent_residual(rho, kernel);
    return {rho, res, worst, ResolventMethod::Compensated};
}

ResolventResult stable_resolvent(double alpha, const Grid& grid) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw Error(ErrorKind::InvalidArgument, "stable index must lie in (1, 2)");
    GridFunction rho = GridFunction::power(grid, alpha - 2.0, 1.0 / std::tgamma(alpha - 1.0));
    GridFunction kernel = GridFunction::power(grid, 1.0 - alpha, 1.0 / std::tgamma(2.0 - alpha));
    auto [res, worst] = resolvent_residual(rho, kernel);
    return {rho, res, worst, ResolventMethod::ClosedForm};
}

bool check_log_convexity(std::span<const double> x, std::span<const double> tail) {
    if (x.size() != tail.size() || x.size() < 3)
        throw Error(ErrorKind::InvalidArgument, "log-convexity needs at least three matching samples");
    std::vector<double> slope;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(tail[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "tail samples must be positive");
        if (i > 0) {
            if (!(x[i] > x[i - 1])) throw Error(ErrorKind::InvalidArgument, "sample points must increase");
            slope.push_back((std::log(tail[i]) - std::log(tail[i - 1])) / (x[i] - x[i - 1]));
        }
    }
    for (std::size_t i = 1; i < slope.size(); ++i)
        if (slope[i] < slope[i - 1] - 1e-9) return false;
    return true;
}

double renewal_residual(const GridFunction& g, const GridFunction& f, const GridFunction& df) {
    GridFunction gdf = convolve(g, df);
    double worst = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        if (f.node(j) < 5.0 * f.grid().step) continue;
        worst = std::max(worst, std::abs(f.value(j) - 1.0 - gdf.value(j)));
    }
    return worst;
}

namespace {

struct Candidate {
    GridFunction f, df;
    SeriesReport report;
    double residual = std::numeric_limits<double>::infinity();
};

}  // namespace

RenewalResult solve_renewal(const GridFunction& g, const RenewalVariant& variant, const RenewalOptions& options) {
    const Grid& grid = g.grid();
    GridFunction term_derived, term_printed;
    std::optional<GridFunction> kernel;
    if (std::holds_alternative<ViaResolvent>(variant)) {
        if (g.is_zero() || !(g.exponent() < 0.0))
            throw Error(ErrorKind::NoResolvent, "renewal kernel needs an origin singularity to admit a resolvent");
        GridFunction rho = solve_first_kind(g);
        term_derived = term_printed = rho;
    } else {
        const GridFunction& h = std::get<ViaKernelH>(variant).h;
        if (!(h.grid() == grid)) throw Error(ErrorKind::GridMismatch, "kernel h lives on another grid");
        GridFunction gh = convolve(g, h);
        double at0 = gh(3.0 * grid.step);
        if (!(std::abs(at0 - 1.0) <= options.kernel_tolerance))
            throw Error(ErrorKind::KernelMismatch,
                        "g * h near 0 is " + format_real(at0) + ", expected 1");
        GridFunction g_h = derivative(gh);
        term_derived = h - g_h;
        term_printed = h + g_h;
        kernel = h;
    }

    auto run = [&](RenewalSign sign) {
        Candidate c;
        SeriesSpec spec;
        spec.term = sign == RenewalSign::Derived ? term_derived : term_printed;
        // derived: -sum rho^n (n >= 1) or -h * sum (h - g_h)^n (n >= 0)
        // printed: sum (-1)^n rho^n (n >= 1) or h * sum (-1)^(n-1) (h + g_h)^(n-1)
        spec.weights = GeometricWeights{sign == RenewalSign::Derived ? 1.0 : -1.0};
        spec.kernel = kernel;
        spec.tolerance = options.tolerance;
        spec.max_terms = options.max_terms;
        std::vector<GridFunction> terms;
        spec.on_term = [&](int, const GridFunction& t) { terms.push_back(t); };
        SeriesResult r = convolution_series(spec);
        const double sgn = (kernel ? sign == RenewalSign::Derived : true) ? -1.0 : 1.0;
        c.df = r.sum.scaled(sgn);
        c.report = r.report;

        // Each piece of f' keeps its own origin exponent, so its primitive and
        // its convolution with g are exact in the first cells; the summed f'
        // would carry a rough regular factor there.
        std::vector<GridFunction> pieces;
        if (kernel) {
            pieces.push_back(kernel->scaled(sgn * series_weight(spec.weights, 0)));
            for (const auto& t : terms) pieces.push_back(convolve(*kernel, t).scaled(sgn));
        } else {
            for (const auto& t : terms) pieces.push_back(t.scaled(sgn));
        }
        std::vector<double> f(grid.count, 0.0), gdf(grid.count, 0.0);
        for (const auto& p : pieces) {
            GridFunction P = primitive(p), G = convolve(g, p);
            for (std::size_t j = 0; j < grid.count; ++j) {
                f[j] += P.value(j);
                gdf[j] += G.value(j);
            }
        }
        double worst = 0.0;
        for (std::size_t j = 0; j < grid.count; ++j)
            if (grid.node(j) >= 5.0 * grid.step) worst = std::max(worst, std::abs(f[j] - 1.0 - gdf[j]));
        c.f = GridFunction(grid, std::move(f), 0.0);
        c.residual = std::isfinite(worst) ? worst : std::numeric_limits<double>::infinity();
        return c;
    };

    Candidate derived, printed;
    std::optional<Error> derived_error;
    try {
        derived = run(RenewalSign::Derived);
    } catch (const Error& e) {
        derived_error = e;
    }
    try {
        printed = run(RenewalSign::Printed);
    } catch (const Error&) {
        // a divergent printed series simply loses the arbitration
    }
    if (derived_error && !std::isfinite(printed.residual)) throw *derived_error;

    bool take_derived = derived.residual <= printed.residual;
    const Candidate& best = take_derived ? derived : printed;
    RenewalResult out;
    out.f = best.f;
    out.derivative = best.df;
    out.residual = best.residual;
    out.sign = take_derived ? RenewalSign::Derived : RenewalSign::Printed;
    out.other_residual = take_derived ? printed.residual : derived.residual;
    out.report = best.report;
    return out;
}

}  // namespace scalefn
