#include "scalefn/scale_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "scalefn/resolvent.hpp"

namespace scalefn {

namespace {

constexpr std::pair<ScaleMethod, std::string_view> method_names[] = {
    {ScaleMethod::SeriesGaussian, "series-gaussian"},
    {ScaleMethod::SeriesRoots, "series-roots"},
    {ScaleMethod::SeriesBoundedVariation, "series-bv"},
    {ScaleMethod::SeriesUnboundedVariation, "series-ubv"},
    {ScaleMethod::ClosedBrownian, "closed-brownian"},
    {ScaleMethod::ClosedStable, "closed-stable"},
    {ScaleMethod::Perturbation, "perturbation"},
    {ScaleMethod::Tilt, "tilt"},
};

void require_q(double q) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw Error(ErrorKind::InvalidArgument, "q must be a finite nonnegative number");
}

void require_regime(const LevyModel& model, Regime want) {
    Regime got = model.classify();
    if (got != want)
        throw Error(ErrorKind::RegimeMismatch, "method needs regime " + std::string(regime_name(want)) +
                                                   ", model is " + std::string(regime_name(got)));
}

ScaleTable make_table(const LevyModel& model, double q, const Grid& grid, GridFunction w, SeriesReport report,
                      ScaleMethod method) {
    ScaleTable t;
    t.fingerprint = model.fingerprint();
    t.q = q;
    t.grid = grid;
    t.W = std::move(w);
    t.regime = model.classify();
    t.report = std::move(report);
    t.method = method;
    return t;
}

SeriesResult run_series(GridFunction term, WeightRule weights, std::optional<GridFunction> kernel,
                        const ScaleOptions& o) {
    SeriesSpec spec;
    spec.term = std::move(term);
    spec.weights = std::move(weights);
    spec.kernel = std::move(kernel);
    spec.tolerance = o.tolerance;
    spec.max_terms = o.max_terms;
    return convolution_series(spec);
}

// Optional first-order Richardson step on top of a grid computation.
template <class Compute>
ScaleTable refined(const Grid& grid, const ScaleOptions& o, Compute&& compute) {
    ScaleTable coarse = compute(grid);
    if (!o.richardson) return coarse;
    ScaleTable fine = compute(Grid(grid.step / 2.0, grid.count * 2));
    const double s = coarse.W.exponent();
    std::vector<double> r(grid.count);
    for (std::size_t j = 0; j < grid.count; ++j) {
        double x = grid.node(j);
        double v = 2.0 * fine.W(x) - coarse.W.value(j);
        r[j] = s == 0.0 ? v : v * std::pow(x, -s);
    }
    coarse.W = GridFunction(grid, std::move(r), s);
    if (!std::isnan(coarse.origin)) coarse.origin = 2.0 * fine.origin - coarse.origin;
    coarse.report = fine.report;
    return coarse;
}

// The density of a jump law moved onto the working grid (zero beyond its own range).
MixedDistribution on_grid(const MixedDistribution& d, const Grid& grid) {
    if (!d.density() || d.density()->grid() == grid) return d;
    const GridFunction& f = *d.density();
    const double top = f.grid().x_max();
    auto r = GridFunction::sample(grid, [&](double x) { return x <= top ? f.regular_at(x) : 0.0; }, f.exponent());
    return MixedDistribution(d.atoms(), r);
}

// M(a, b, z) for z >= 0 by its positive series.
double kummer_m(double a, double b, double z) {
    double sum = 1.0, term = 1.0;
    for (int k = 0; k < 100000; ++k) {
        term *= (a + k) / (b + k) * z / (k + 1.0);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

}  // namespace

std::string_view method_name(ScaleMethod m) noexcept {
    for (const auto& [k, v] : method_names)
        if (k == m) return v;
    return "unknown";
}

std::optional<ScaleMethod> parse_method(std::string_view name) {
    for (const auto& [k, v] : method_names)
        if (v == name) return k;
    return std::nullopt;
}

std::optional<PowerKernel> default_power_kernel(const LevyModel& model) {
    if (const auto* s = std::get_if<StableJumps>(&model.jumps()))
        return PowerKernel{1.0 / std::tgamma(2.0 - s->alpha), s->alpha - 1.0};
    return std::nullopt;
}

ScaleTable scale_gaussian(const LevyModel& model, double q, const Grid& grid, const ScaleOptions& options) {
    require_q(q);
    require_regime(model, Regime::Gaussian);
    const bool no_jumps = std::holds_alternative<NoJumps>(model.jumps());
    const bool split = !no_jumps && (options.truncation_level || !model.has_finite_mean());
    return refined(grid, options, [&](const Grid& g) {
        GridFunction id = GridFunction::power(g, 1.0);
        GridFunction f;
        if (!split) {
            const double c2 = model.c_double_prime();
            f = GridFunction::sample(g, [&](double x) { return -c2 + q * x; });
            if (!no_jumps) f = f - model.integrated_tail_on(g);
        } else {
            MeasureTruncation tr = model.truncate_measure(options.truncation_level.value_or(1.0), g);
            f = GridFunction::sample(g, [&](double x) { return -tr.c_double_prime_z + (q + tr.mass) * x; }) -
                tr.small_integrated_tail;
            if (!tr.large_jumps.empty()) f = f - convolve_mixed(id, tr.large_jumps);
        }
        SeriesResult r = run_series(f, GeometricWeights{model.sigma2()}, id, options);
        ScaleTable t = make_table(model, q, g, r.sum, r.report, ScaleMethod::SeriesGaussian);
        t.origin = r.origin_value;
        return t;
    });
}

ScaleTable scale_gaussian_roots(const LevyModel& model, double q, const Grid& grid, const ScaleOptions& options) {
    require_q(q);
    if (!(model.sigma2() > 0.0)) throw Error(ErrorKind::RegimeMismatch, "root expansion needs a Gaussian part");
    MixedDistribution nu;
    if (const auto* cp = std::get_if<CompoundPoissonJumps>(&model.jumps())) nu = cp->law.scaled(cp->rate);
    else if (!std::holds_alternative<NoJumps>(model.jumps())) {
        if (!std::isfinite(model.total_mass()))
            throw Error(ErrorKind::InfiniteMeasure, "root expansion needs a finite jump measure");
        throw Error(ErrorKind::InvalidArgument, "root expansion needs a compound Poisson jump law");
    }

    return refined(grid, options, [&](const Grid& g) {
        const double s2 = model.sigma2(), c1 = model.c_prime(), mass = nu.total_mass();
        const double disc = std::sqrt(c1 * c1 + 4.0 * s2 * (q + mass));
        const double r_minus = (-c1 - disc) / (2.0 * s2), d = disc / s2;
        MixedDistribution jumps = on_grid(nu, g);

        double tol = options.tolerance > 0.0 ? options.tolerance : 1e-10;
        SeriesMonitor mon(tol, options.max_terms);
        MixedDistribution power = MixedDistribution::dirac(0.0);
        GridFunction w = GridFunction::zero(g);
        GridFunction last = w;
        int used = 0;
        bool converged = false;
        for (int n = 0;; ++n) {
            if (n > 0) {
                power = convolve_measures(power, jumps, g);
                if (power.empty()) {
                    converged = true;  // every further power starts beyond x_max
                    break;
                }
            }
            // (x^n e^{r+ x} / n!) * (x^n e^{r- x} / n!) = x^{2n+1}/(2n+1)! e^{r- x} M(n+1, 2n+2, d x)
            std::vector<double> e(g.count);
            for (std::size_t j = 0; j < g.count; ++j) {
                double x = g.node(j);
                double lead = (2.0 * n + 1.0) * std::log(x) - std::lgamma(2.0 * n + 2.0) + r_minus * x;
                e[j] = std::exp(lead) * kummer_m(n + 1.0, 2.0 * n + 2.0, d * x);
            }
            GridFunction term = convolve_mixed(GridFunction(g, std::move(e)), power)
                                    .scaled((n % 2 == 0 ? 1.0 : -1.0) * std::pow(s2, -(n + 1.0)));
            w = w + term;
            last = term;
            ++used;
            if (n > 0 && mon.record(l1_norm(term))) {
                converged = true;
                break;
            }
            if (mon.exhausted()) break;
        }
        double r = mon.tail_ratio();
        SeriesReport rep = mon.report(converged, r < 1.0 ? sup_norm(last) * r / (1.0 - r) : sup_norm(last));
        rep.terms_used = used;
        if (!converged) {
            SeriesResult partial{w, 0.0, 0.0, rep};
            throw SeriesNotConverged("root expansion did not converge", partial);
        }
        return make_table(model, q, g, w, rep, ScaleMethod::SeriesRoots);
    });
}

ScaleTable scale_bounded_variation(const LevyModel& model, double q, const Grid& grid, const ScaleOptions& options) {
    require_q(q);
    require_regime(model, Regime::BoundedVariation);
    return refined(grid, options, [&](const Grid& g) {
        GridFunction f = model.tail_on(g) + GridFunction::constant(g, q);
        SeriesResult r = run_series(f, GeometricWeights{model.c_prime()}, GridFunction::constant(g, 1.0), options);
        ScaleTable t = make_table(model, q, g, r.sum, r.report, ScaleMethod::SeriesBoundedVariation);
        t.origin = r.origin_value;
        return t;
    });
}

ScaleTable scale_unbounded_variation(const LevyModel& model, double q, const Grid& grid,
                                     const std::optional<KernelSpec>& kernel, const ScaleOptions& options) {
    require_q(q);
    require_regime(model, Regime::UnboundedVariationNoGaussian);
    KernelSpec spec;
    if (kernel) spec = *kernel;
    else if (auto pk = default_power_kernel(model)) spec = *pk;
    else spec = ResolventKernel{};
    const bool split = options.truncation_level || !model.has_finite_mean();

    return refined(grid, options, [&](const Grid& g) {
        GridFunction k;
        double c2 = 0.0, mass = 0.0;
        std::optional<MixedDistribution> large;
        if (split) {
            MeasureTruncation tr = model.truncate_measure(options.truncation_level.value_or(1.0), g);
            k = tr.small_integrated_tail;
            c2 = tr.c_double_prime_z;
            mass = tr.mass;
            if (!tr.large_jumps.empty()) large = tr.large_jumps;
        } else {
            k = model.integrated_tail_on(g);
            c2 = model.c_double_prime();
        }

        // h and g_h = d/dx (h * k)
        GridFunction h, gh = GridFunction::zero(g);
        if (const auto* pk = std::get_if<PowerKernel>(&spec)) {
            const double w = std::sin(pk->gamma * std::numbers::pi) / (pk->C * std::numbers::pi);
            h = GridFunction::power(g, pk->gamma - 1.0, w);
            gh = frac_derivative(k, 1.0 - pk->gamma).scaled(w * std::tgamma(pk->gamma));
        } else if (const auto* eh = std::get_if<ExplicitH>(&spec)) {
            if (!(eh->h.grid() == g)) throw Error(ErrorKind::GridMismatch, "explicit kernel h lives on another grid");
            h = eh->h;
            gh = derivative(convolve(h, k));
        } else if (std::holds_alternative<ResolventKernel>(spec)) {
            h = solve_resolvent(k).rho;
        } else {
            if (split) throw Error(ErrorKind::InvalidArgument, "the compensated kernel needs a finite mean");
            h = resolvent_via_compensated(model, g).rho;
        }
        double at = convolve(h, k)(3.0 * g.step);
        if (!(std::abs(at - 1.0) <= options.kernel_tolerance))
            throw Error(ErrorKind::KernelMismatch, "h * nu-bar-bar at 3h is " + format_real(at) + ", expected 1");

        GridFunction H = primitive(h);
        GridFunction f = combine(q + mass, H, -c2, h) - gh;
        if (large) f = f - convolve_mixed(H, *large);
        SeriesResult r = run_series(f, GeometricWeights{1.0}, H, options);
        ScaleTable t = make_table(model, q, g, r.sum, r.report, ScaleMethod::SeriesUnboundedVariation);
        t.origin = r.origin_value;
        return t;
    });
}

double scale_brownian_closed_form(double c, double sigma2, double q, double x) {
    if (!(sigma2 > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma2 must be positive");
    require_q(q);
    if (x <= 0.0) return 0.0;
    const double disc = std::sqrt(c * c + 4.0 * sigma2 * q);
    if (disc == 0.0) return x / sigma2;
    const double lo = (-c - disc) / (2.0 * sigma2), gap = disc / sigma2;
    // (e^{b+ x} - e^{b- x}) / (sigma2 (b+ - b-)) without cancellation
    return std::exp(lo * x) * std::expm1(gap * x) / (sigma2 * gap);
}

double scale_stable_closed_form(double alpha, double q, double x) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw Error(ErrorKind::InvalidArgument, "stable index must lie in (1, 2)");
    require_q(q);
    if (x <= 0.0) return 0.0;
    if (q == 0.0) return std::pow(x, alpha - 1.0) / std::tgamma(alpha);
    return alpha * std::pow(x, alpha - 1.0) * mittag_leffler_derivative(alpha, q * std::pow(x, alpha));
}

ScaleTable scale_closed_form(const LevyModel& model, double q, const Grid& grid) {
    require_q(q);
    SeriesReport rep;
    rep.converged = true;
    if (std::holds_alternative<NoJumps>(model.jumps()) && model.sigma2() > 0.0) {
        auto w = GridFunction::sample(
            grid, [&](double x) { return scale_brownian_closed_form(model.c(), model.sigma2(), q, x) / x; }, 1.0);
        return make_table(model, q, grid, w, rep, ScaleMethod::ClosedBrownian);
    }
    if (auto a = model.stable_index(); a && model.sigma2() == 0.0 && model.c_double_prime() == 0.0) {
        const double alpha = *a;
        auto w = GridFunction::sample(
            grid, [&](double x) { return scale_stable_closed_form(alpha, q, x) / std::pow(x, alpha - 1.0); },
            alpha - 1.0);
        return make_table(model, q, grid, w, rep, ScaleMethod::ClosedStable);
    }
    throw Error(ErrorKind::InvalidArgument, "closed forms exist only for Brownian and pure stable models");
}

ScaleTable tilt(const LevyModel& model, double q, const Grid& grid, const std::optional<KernelSpec>& kernel,
                const ScaleOptions& options) {
    require_q(q);
    const double phi = model.phi(q);
    ScaleTable t;
    if (phi == 0.0) {
        t = compute_scale(model, q, grid, std::nullopt, kernel, options);
    } else {
        LevyModel tilted_model = model.tilted(phi);
        t = compute_scale(tilted_model, 0.0, grid, std::nullopt, kernel, options);
        t.W = t.W.multiplied([phi](double x) { return std::exp(phi * x); });
    }
    t.fingerprint = model.fingerprint();
    t.q = q;
    t.regime = model.classify();
    t.method = ScaleMethod::Tilt;
    return t;
}

ScaleTable scale_with_cpp_perturbation(const std::function<ScaleTable(double)>& base, double lambda,
                                       const MixedDistribution& jumps, double q, const Grid& grid,
                                       const ScaleOptions& options) {
    require_q(q);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidArgument, "rate must be >= 0");
    if (std::abs(jumps.total_mass() - 1.0) > 1e-8)
        throw Error(ErrorKind::MassNotOne, "jump law has mass " + format_real(jumps.total_mass()));
    if (lambda == 0.0) {
        ScaleTable t = base(q);
        t.method = ScaleMethod::Perturbation;
        return t;
    }
    ScaleTable b = base(q + lambda);
    if (!(b.grid == grid)) throw Error(ErrorKind::GridMismatch, "base scale function lives on another grid");
    GridFunction g = -convolve_mixed(b.W, on_grid(jumps, grid));
    std::vector<double> weights(static_cast<std::size_t>(options.max_terms) + 1);
    for (std::size_t k = 0; k < weights.size(); ++k) weights[k] = std::pow(lambda, static_cast<double>(k));
    SeriesResult r = run_series(g, std::move(weights), b.W, options);

    ScaleTable t = b;
    t.fingerprint = b.fingerprint + " minus compound Poisson(rate=" + format_real(lambda) + ")";
    t.q = q;
    t.W = r.sum;
    t.origin = r.origin_value;
    t.report = r.report;
    t.method = ScaleMethod::Perturbation;
    return t;
}

double ztp_mass(int k, int n, double mu) {
    if (k < 0 || n < 0) throw Error(ErrorKind::InvalidArgument, "ztp_mass needs k, n >= 0");
    if (!(mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "ztp_mass needs mu > 0");
    if (n == 0) return k == 0 ? 1.0 : 0.0;
    if (k < n) return 0.0;
    // z(k, m) = Poisson(m mu)(k) - sum_{l=1}^{m-1} C(m, l) e^{-l mu} z(k, m - l)
    std::vector<double> z(static_cast<std::size_t>(n) + 1, 0.0);
    for (int m = 1; m <= n; ++m) {
        double v = std::exp(k * std::log(m * mu) - std::lgamma(k + 1.0) - m * mu);
        double binom = 1.0;
        for (int l = 1; l < m; ++l) {
            binom = binom * (m - l + 1) / l;
            v -= binom * std::exp(-l * mu) * z[static_cast<std::size_t>(m - l)];
        }
        z[static_cast<std::size_t>(m)] = v;
    }
    return z[static_cast<std::size_t>(n)];
}

double ztp_convolution_mass(int k, int n, double mu) {
    return ztp_mass(k, n, mu) / std::pow(-std::expm1(-mu), n);
}

ScaleTable compute_scale(const LevyModel& model, double q, const Grid& grid, std::optional<ScaleMethod> method,
                         const std::optional<KernelSpec>& kernel, const ScaleOptions& options) {
    if (!method) {
        switch (model.classify()) {
            case Regime::Gaussian: method = ScaleMethod::SeriesGaussian; break;
            case Regime::BoundedVariation: method = ScaleMethod::SeriesBoundedVariation; break;
            case Regime::UnboundedVariationNoGaussian: method = ScaleMethod::SeriesUnboundedVariation; break;
        }
    }
    switch (*method) {
        case ScaleMethod::SeriesGaussian: return scale_gaussian(model, q, grid, options);
        case ScaleMethod::SeriesRoots: return scale_gaussian_roots(model, q, grid, options);
        case ScaleMethod::SeriesBoundedVariation: return scale_bounded_variation(model, q, grid, options);
        case ScaleMethod::SeriesUnboundedVariation: return scale_unbounded_variation(model, q, grid, kernel, options);
        case ScaleMethod::ClosedBrownian:
        case ScaleMethod::ClosedStable: return scale_closed_form(model, q, grid);
        case ScaleMethod::Tilt: return tilt(model, q, grid, kernel, options);
        case ScaleMethod::Perturbation: break;
    }
    throw Error(ErrorKind::InvalidArgument, "the perturbation method needs a base scale function, not a model");
}

}  // namespace scalefn
