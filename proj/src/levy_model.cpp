#include "scalefn/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "scalefn/errors.hpp"
#include "scalefn/special.hpp"

namespace scalefn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double integrate_to_infinity(const std::function<double(double)>& f, double a) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double t) { return f(a + t); }, 0.0, kInf);
}

double integrate_finite(const std::function<double(double)>& f, double a, double b) {
    if (b <= a) return 0.0;
    if (a > 0.0) return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-13);
    boost::math::quadrature::tanh_sinh<double> q;
    return q.integrate(f, a, b);
}

// log-log slope of f between x1 and x2; nullopt when f vanishes there
std::optional<double> power_slope(const std::function<double(double)>& f, double x1, double x2) {
    double f1 = f(x1), f2 = f(x2);
    if (!(f1 > 0.0) || !(f2 > 0.0)) return std::nullopt;
    return (std::log(f2) - std::log(f1)) / (std::log(x2) - std::log(x1));
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// The regular factor next to a singular origin behaves like c0 - c1 x^(-s),
// which a midpoint sample misrepresents at first order in h. The first cells
// therefore carry cell averages: r_j = int_cell f / int_cell x^s.
constexpr std::size_t kAveragedCells = 64;

GridFunction with_cell_averages(const GridFunction& f, const std::function<double(double, double)>& cell_integral) {
    if (f.exponent() == 0.0) return f;
    const Grid& g = f.grid();
    std::vector<double> r(f.regular().begin(), f.regular().end());
    for (std::size_t j = 0; j < std::min(kAveragedCells, g.count); ++j)
        r[j] = cell_integral(g.cell_lo(j), g.cell_hi(j)) / power_integral(g.cell_lo(j), g.cell_hi(j), f.exponent());
    return GridFunction(g, std::move(r), f.exponent());
}

}  // namespace

std::string_view regime_name(Regime r) noexcept {
    switch (r) {
        case Regime::Gaussian: return "Gaussian";
        case Regime::BoundedVariation: return "BoundedVariation";
        case Regime::UnboundedVariationNoGaussian: return "UnboundedVariationNoGaussian";
    }
    return "Unknown";
}

// Prefix sums over a discrete or tabulated measure so that masses, first
// moments and tail integrals cost O(log n).
struct LevyModel::MeasureTable {
    // atoms (already multiplied by the rate)
    std::vector<double> loc, mass_suffix, moment_suffix;
    // density part: nu(dy) = y^s r_j on cell j of `grid`
    std::optional<GridFunction> density;
    std::vector<double> cell_mass_suffix, cell_moment_suffix;
    // tabulated nu-bar: suffix sums of its cell integrals
    std::optional<GridFunction> tail;
    std::vector<double> tail_suffix;

    static std::vector<double> suffix(const std::vector<double>& v) {
        std::vector<double> out(v.size() + 1, 0.0);
        for (std::size_t k = v.size(); k-- > 0;) out[k] = out[k + 1] + v[k];
        return out;
    }

    static MeasureTable for_law(double rate, const MixedDistribution& law) {
        MeasureTable t;
        std::vector<double> m, y;
        for (const Atom& a : law.atoms()) {
            t.loc.push_back(a.location);
            m.push_back(rate * a.mass);
            y.push_back(rate * a.mass * a.location);
        }
        t.mass_suffix = suffix(m);
        t.moment_suffix = suffix(y);
        if (law.density()) {
            t.density = law.density()->scaled(rate);
            const Grid& g = t.density->grid();
            double s = t.density->exponent();
            std::vector<double> cm(g.count), cy(g.count);
            for (std::size_t j = 0; j < g.count; ++j) {
                double r = t.density->regular()[j];
                cm[j] = r * power_integral(g.cell_lo(j), g.cell_hi(j), s);
                cy[j] = r * power_integral(g.cell_lo(j), g.cell_hi(j), s + 1.0);
            }
            t.cell_mass_suffix = suffix(cm);
            t.cell_moment_suffix = suffix(cy);
        }
        return t;
    }

    static MeasureTable for_tail(const GridFunction& tail) {
        MeasureTable t;
        t.tail = tail;
        t.tail_suffix = suffix(cell_integrals(tail));
        return t;
    }

    // int_[x, inf) y^p density(y) dy for p in {0, 1}
    double density_above(double x, int p) const {
        if (!density) return 0.0;
        const Grid& g = density->grid();
        const auto& suf = p == 0 ? cell_mass_suffix : cell_moment_suffix;
        if (x <= 0.0) return suf[0];
        if (x >= g.x_max()) return 0.0;
        auto j = std::min(static_cast<std::size_t>(x / g.step), g.count - 1);
        double s = density->exponent() + p;
        return suf[j + 1] + density->regular()[j] * power_integral(x, g.cell_hi(j), s);
    }

    // nu([x, inf)) and int_[x, inf) y nu(dy)
    double mass_above(double x) const {
        if (tail) return tail_at(x);
        auto k = static_cast<std::size_t>(std::lower_bound(loc.begin(), loc.end(), x) - loc.begin());
        return mass_suffix[k] + density_above(x, 0);
    }
    double moment_above(double x) const {
        auto k = static_cast<std::size_t>(std::lower_bound(loc.begin(), loc.end(), x) - loc.begin());
        return moment_suffix[k] + density_above(x, 1);
    }

    double tail_at(double x) const {
        const Grid& g = tail->grid();
        if (x >= g.x_max()) return 0.0;
        auto j = std::min(static_cast<std::size_t>(std::max(x, 0.0) / g.step), g.count - 1);
        double r = tail->regular()[j];
        return tail->exponent() == 0.0 ? r : std::pow(x, tail->exponent()) * r;
    }

    // int_[x, inf) nu-bar(y) dy for a tabulated tail
    double tail_integral_above(double x) const {
        const Grid& g = tail->grid();
        if (x <= 0.0) return tail_suffix[0];
        if (x >= g.x_max()) return 0.0;
        auto j = std::min(static_cast<std::size_t>(x / g.step), g.count - 1);
        return tail_suffix[j + 1] + tail->regular()[j] * power_integral(x, g.cell_hi(j), tail->exponent());
    }

    // int_[x, inf) (y - x) nu(dy)
    double integrated_tail(double x) const {
        if (tail) return tail_integral_above(x);
        return moment_above(x) - x * mass_above(x);
    }

    // int_lo^hi nu-bar = int (min(y, hi) - lo)_+ nu(dy)
    double tail_integral(double lo, double hi) const {
        if (hi <= lo) return 0.0;
        if (tail) return tail_integral_above(lo) - tail_integral_above(hi);
        double m_lo = mass_above(lo), m_hi = mass_above(hi);
        double y_between = moment_above(lo) - moment_above(hi);
        return (hi - lo) * m_hi + y_between - lo * (m_lo - m_hi);
    }
};

LevyModel::LevyModel(double drift, DriftConvention convention, double sigma2, JumpMeasure jumps)
    : drift_(drift), convention_(convention), sigma2_(sigma2), jumps_(std::move(jumps)) {
    if (!std::isfinite(drift)) throw Error(ErrorKind::InvalidArgument, "drift must be finite");
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
        throw Error(ErrorKind::InvalidArgument, "Gaussian coefficient must be finite and nonnegative");

    std::visit(overloaded{
                   [](const NoJumps&) {},
                   [](const StableJumps& j) {
                       if (!(j.alpha > 1.0 && j.alpha < 2.0))
                           throw Error(ErrorKind::InvalidArgument, "stable index must lie in (1, 2)");
                   },
                   [this](const CompoundPoissonJumps& j) {
                       if (!(j.rate > 0.0) || !std::isfinite(j.rate))
                           throw Error(ErrorKind::InvalidArgument, "Poisson rate must be positive");
                       table_ = std::make_shared<const MeasureTable>(MeasureTable::for_law(j.rate, j.law));
                   },
                   [](const TemperedStableJumps& j) {
                       if (!(j.alpha > 0.0 && j.alpha < 2.0) || j.alpha == 1.0)
                           throw Error(ErrorKind::InvalidArgument, "tempered stable index must lie in (0,1) or (1,2)");
                       if (!(j.theta >= 0.0) || !(j.scale > 0.0))
                           throw Error(ErrorKind::InvalidArgument, "tempering must be >= 0 and scale > 0");
                   },
                   [this](const TabulatedTailJumps& j) {
                       if (j.tail.exponent() > 0.0)
                           throw Error(ErrorKind::InvalidArgument, "a tail function cannot vanish at the origin");
                       table_ = std::make_shared<const MeasureTable>(MeasureTable::for_tail(j.tail));
                   },
                   [](const CustomJumps& j) {
                       if (!j.tail) throw Error(ErrorKind::InvalidArgument, "custom jumps need a tail function");
                       if (!(j.tail_exponent > -2.0 && j.tail_exponent <= 0.0))
                           throw Error(ErrorKind::InvalidArgument, "custom tail exponent must lie in (-2, 0]");
                   },
               },
               jumps_);

    small_moment_ = small_jump_moment();
    large_moment_ = large_jump_moment();
    switch (convention) {
        case DriftConvention::C: c_ = drift; break;
        case DriftConvention::CPrime:
            if (!std::isfinite(small_moment_))
                throw Error(ErrorKind::NonConvergentIntegral, "c' given but small jumps have infinite variation");
            c_ = drift - small_moment_;
            break;
        case DriftConvention::CDoublePrime:
            if (!std::isfinite(large_moment_))
                throw Error(ErrorKind::NonConvergentIntegral, "c'' given but the jumps have infinite mean");
            c_ = drift + large_moment_;
            break;
    }
}

double LevyModel::small_jump_moment() const {
    return std::visit(
        overloaded{
            [](const NoJumps&) { return 0.0; },
            [](const StableJumps&) { return kInf; },
            [this](const CompoundPoissonJumps&) { return table_->moment_above(0.0) - table_->moment_above(1.0); },
            [](const TemperedStableJumps& j) {
                if (j.alpha > 1.0) return kInf;
                if (j.theta == 0.0) return j.scale / (1.0 - j.alpha);
                return j.scale * std::pow(j.theta, j.alpha - 1.0) * boost::math::tgamma_lower(1.0 - j.alpha, j.theta);
            },
            [this](const TabulatedTailJumps&) {
                // int_0^1 nu-bar = int min(y, 1) nu(dy)
                return table_->tail_integral(0.0, 1.0) - table_->tail_at(1.0);
            },
            [](const CustomJumps& j) {
                auto a = power_slope(j.tail, 1e-12, 1e-10);
                if (a && -*a >= 0.99) return kInf;
                return integrate_finite(j.tail, 0.0, 1.0) - j.tail(1.0);
            },
        },
        jumps_);
}

double LevyModel::large_jump_moment() const {
    return std::visit(
        overloaded{
            [](const NoJumps&) { return 0.0; },
            [](const StableJumps& j) { return j.alpha / std::tgamma(2.0 - j.alpha); },
            [this](const CompoundPoissonJumps&) { return table_->moment_above(1.0); },
            [](const TemperedStableJumps& j) {
                if (j.theta == 0.0) return j.alpha < 1.0 ? kInf : j.scale / (j.alpha - 1.0);
                return j.scale * std::pow(j.theta, j.alpha - 1.0) * upper_gamma(1.0 - j.alpha, j.theta);
            },
            [this](const TabulatedTailJumps&) { return table_->tail_integral_above(1.0) + table_->tail_at(1.0); },
            [](const CustomJumps& j) {
                auto a = power_slope(j.tail, 1e10, 1e12);
                if (a && -*a <= 1.01) return kInf;
                return integrate_to_infinity(j.tail, 1.0) + j.tail(1.0);
            },
        },
        jumps_);
}

bool LevyModel::has_bounded_variation() const { return sigma2_ == 0.0 && std::isfinite(small_moment_); }
bool LevyModel::has_finite_mean() const { return std::isfinite(large_moment_); }

double LevyModel::c_prime() const {
    if (!std::isfinite(small_moment_))
        throw Error(ErrorKind::NonConvergentIntegral, "int_(0,1) y nu(dy) diverges");
    return c_ + small_moment_;
}

double LevyModel::c_double_prime() const {
    if (!std::isfinite(large_moment_))
        throw Error(ErrorKind::NonConvergentIntegral, "int_[1,inf) y nu(dy) diverges");
    return c_ - large_moment_;
}

DriftConstants LevyModel::drift_constants() const {
    DriftConstants d;
    d.c = c_;
    if (std::isfinite(small_moment_)) d.c_prime = c_ + small_moment_;
    if (std::isfinite(large_moment_)) d.c_double_prime = c_ - large_moment_;
    return d;
}

double LevyModel::total_mass() const {
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [](const StableJumps&) { return kInf; },
                          [this](const CompoundPoissonJumps&) { return table_->mass_above(0.0); },
                          [](const TemperedStableJumps&) { return kInf; },
                          [](const TabulatedTailJumps& j) {
                              return j.tail.exponent() < 0.0 ? kInf : j.tail.regular()[0];
                          },
                          [](const CustomJumps& j) { return j.tail_exponent < 0.0 ? kInf : j.tail(1e-300); },
                      },
                      jumps_);
}

Regime LevyModel::classify() const {
    if (sigma2_ > 0.0) return Regime::Gaussian;
    if (std::isfinite(small_moment_)) {
        if (!(c_prime() > 0.0))
            throw Error(ErrorKind::SubordinatorExcluded,
                        "no Gaussian part, bounded variation and c' = " + fmt(c_prime()) + " <= 0");
        return Regime::BoundedVariation;
    }
    return Regime::UnboundedVariationNoGaussian;
}

double LevyModel::psi(double beta) const {
    if (!(beta >= 0.0)) throw Error(ErrorKind::InvalidArgument, "psi needs beta >= 0");
    if (beta == 0.0) return 0.0;
    const double gauss = sigma2_ * beta * beta;
    return std::visit(
        overloaded{
            [&](const NoJumps&) { return c_ * beta + gauss; },
            [&](const StableJumps& j) { return c_double_prime() * beta + gauss + std::pow(beta, j.alpha); },
            [&](const TemperedStableJumps& j) {
                double k = j.scale * std::tgamma(-j.alpha), t = j.theta, a = j.alpha;
                if (a > 1.0) {
                    double lin = t == 0.0 ? 0.0 : a * std::pow(t, a - 1.0) * beta;
                    return c_double_prime() * beta + gauss + k * (std::pow(t + beta, a) - std::pow(t, a) - lin);
                }
                return c_prime() * beta + gauss + k * (std::pow(t + beta, a) - std::pow(t, a));
            },
            [&](const CompoundPoissonJumps& j) {
                double lt = 0.0;
                for (const Atom& a : j.law.atoms()) lt += a.mass * std::exp(-beta * a.location);
                if (j.law.density()) lt += laplace_transform(*j.law.density(), beta);
                return c_prime() * beta + gauss + j.rate * (lt - j.law.total_mass());
            },
            [&](const TabulatedTailJumps& j) {
                return c_prime() * beta + gauss - beta * laplace_transform(j.tail, beta);
            },
            [&](const CustomJumps& j) {
                double near = integrate_finite([&](double y) { return j.tail(y) * -std::expm1(-beta * y); }, 0.0, 1.0);
                double far = integrate_to_infinity([&](double y) { return j.tail(y) * std::exp(-beta * y); }, 1.0);
                return c_ * beta + gauss + beta * near - beta * far - beta * j.tail(1.0);
            },
        },
        jumps_);
}

double LevyModel::psi_derivative(double beta) const {
    if (!(beta >= 0.0)) throw Error(ErrorKind::InvalidArgument, "psi_derivative needs beta >= 0");
    const double gauss = 2.0 * sigma2_ * beta;
    return std::visit(
        overloaded{
            [&](const NoJumps&) { return c_ + gauss; },
            [&](const StableJumps& j) {
                return c_double_prime() + gauss + j.alpha * std::pow(beta, j.alpha - 1.0);
            },
            [&](const TemperedStableJumps& j) {
                double k = j.scale * std::tgamma(-j.alpha) * j.alpha, t = j.theta, a = j.alpha;
                if (a > 1.0) return c_double_prime() + gauss + k * (std::pow(t + beta, a - 1.0) - std::pow(t, a - 1.0));
                return c_prime() + gauss + k * std::pow(t + beta, a - 1.0);
            },
            [&](const CompoundPoissonJumps& j) {
                double m = 0.0;
                for (const Atom& a : j.law.atoms()) m += a.mass * a.location * std::exp(-beta * a.location);
                if (j.law.density()) {
                    const GridFunction& d = *j.law.density();
                    m += laplace_transform(GridFunction(d.grid(), {d.regular().begin(), d.regular().end()},
                                                        d.exponent() + 1.0),
                                           beta);
                }
                return c_prime() + gauss - j.rate * m;
            },
            [&](const TabulatedTailJumps& j) {
                const GridFunction& t = j.tail;
                GridFunction xt(t.grid(), {t.regular().begin(), t.regular().end()}, t.exponent() + 1.0);
                return c_prime() + gauss - laplace_transform(t, beta) + beta * laplace_transform(xt, beta);
            },
            [&](const CustomJumps&) {
                double d = 1e-5 * std::max(1.0, beta);
                if (beta < d) return (psi(beta + d) - psi(beta)) / d;
                return (psi(beta + d) - psi(beta - d)) / (2.0 * d);
            },
        },
        jumps_);
}

double LevyModel::phi(double q) const {
    if (!(q >= 0.0) || !std::isfinite(q)) throw Error(ErrorKind::InvalidArgument, "phi needs q >= 0");
    if (q == 0.0 && !std::holds_alternative<CustomJumps>(jumps_) && psi_derivative(0.0) >= 0.0) return 0.0;
    double hi = 1.0;
    while (!(psi(hi) > q)) {
        hi *= 2.0;
        if (hi > 1152921504606846976.0)  // 2^60
            throw Error(ErrorKind::RootNotBracketed, "psi stays below q up to beta = 2^60");
    }
    // {psi <= q} is the interval [0, Phi(q)] by convexity
    double lo = 0.0;
    for (int it = 0; it < 2000; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (psi(mid) <= q) lo = mid;
        else hi = mid;
    }
    return lo;
}

double LevyModel::tail(double x) const {
    if (!(x > 0.0)) throw Error(ErrorKind::InvalidArgument, "tail needs x > 0");
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [&](const StableJumps& j) {
                              return (j.alpha - 1.0) * std::pow(x, -j.alpha) / std::tgamma(2.0 - j.alpha);
                          },
                          [&](const TemperedStableJumps& j) {
                              if (j.theta == 0.0) return j.scale * std::pow(x, -j.alpha) / j.alpha;
                              return j.scale * std::pow(j.theta, j.alpha) * upper_gamma(-j.alpha, j.theta * x);
                          },
                          [&](const CompoundPoissonJumps&) { return table_->mass_above(x); },
                          [&](const TabulatedTailJumps&) { return table_->tail_at(x); },
                          [&](const CustomJumps& j) { return j.tail(x); },
                      },
                      jumps_);
}

double LevyModel::integrated_tail(double x) const {
    if (!(x > 0.0)) throw Error(ErrorKind::InvalidArgument, "integrated_tail needs x > 0");
    if (!has_finite_mean())
        throw Error(ErrorKind::NonConvergentIntegral, "int_[1,inf) y nu(dy) diverges");
    return std::visit(
        overloaded{
            [](const NoJumps&) { return 0.0; },
            [&](const StableJumps& j) { return std::pow(x, 1.0 - j.alpha) / std::tgamma(2.0 - j.alpha); },
            [&](const TemperedStableJumps& j) {
                double a = j.alpha, t = j.theta;
                if (t == 0.0) return j.scale * std::pow(x, 1.0 - a) / (a * (a - 1.0));
                return j.scale * (std::pow(t, a - 1.0) * upper_gamma(1.0 - a, t * x) -
                                  x * std::pow(t, a) * upper_gamma(-a, t * x));
            },
            [&](const CompoundPoissonJumps&) { return table_->integrated_tail(x); },
            [&](const TabulatedTailJumps&) { return table_->integrated_tail(x); },
            [&](const CustomJumps& j) {
                if (j.integrated_tail) return j.integrated_tail(x);
                return integrate_to_infinity(j.tail, x);
            },
        },
        jumps_);
}

double LevyModel::tail_integral(double lo, double hi) const {
    if (!(lo >= 0.0) || hi < lo) throw Error(ErrorKind::InvalidArgument, "tail_integral needs 0 <= lo <= hi");
    if (hi == lo) return 0.0;
    return std::visit(
        overloaded{
            [](const NoJumps&) { return 0.0; },
            [&](const StableJumps& j) {
                if (lo == 0.0) return kInf;
                double g = std::tgamma(2.0 - j.alpha);
                return (std::pow(lo, 1.0 - j.alpha) - std::pow(hi, 1.0 - j.alpha)) / g;
            },
            [&](const TemperedStableJumps& j) {
                if (j.alpha > 1.0 && lo == 0.0) return kInf;
                if (j.theta == 0.0) {
                    double e = 1.0 - j.alpha;
                    return j.scale * (std::pow(hi, e) - std::pow(lo, e)) / (j.alpha * e);
                }
                if (lo == 0.0) return integrate_finite([&](double y) { return tail(y); }, lo, hi);
                return integrated_tail(lo) - integrated_tail(hi);
            },
            [&](const CompoundPoissonJumps&) { return table_->tail_integral(lo, hi); },
            [&](const TabulatedTailJumps&) { return table_->tail_integral(lo, hi); },
            [&](const CustomJumps& j) { return integrate_finite(j.tail, lo, hi); },
        },
        jumps_);
}

double LevyModel::integrated_tail_exponent() const {
    return std::visit(overloaded{
                          [](const StableJumps& j) { return 1.0 - j.alpha; },
                          [](const TemperedStableJumps& j) { return j.alpha > 1.0 ? 1.0 - j.alpha : 0.0; },
                          [](const CustomJumps& j) { return j.tail_exponent < -1.0 ? j.tail_exponent + 1.0 : 0.0; },
                          [](const auto&) { return 0.0; },
                      },
                      jumps_);
}

GridFunction LevyModel::tail_on(const Grid& grid) const {
    if (!std::isfinite(small_moment_))
        throw Error(ErrorKind::NonConvergentIntegral, "nu-bar is not integrable at the origin");
    auto sampled = [&](double s) {
        GridFunction f = GridFunction::sample(grid, [&](double x) { return tail(x) * std::pow(x, -s); }, s);
        return with_cell_averages(f, [&](double lo, double hi) { return tail_integral(lo, hi); });
    };
    auto cell_average = [&] {
        std::vector<double> r(grid.count);
        for (std::size_t j = 0; j < grid.count; ++j)
            r[j] = tail_integral(grid.cell_lo(j), grid.cell_hi(j)) / grid.step;
        return GridFunction(grid, std::move(r), 0.0);
    };
    return std::visit(overloaded{
                          [&](const NoJumps&) { return GridFunction::zero(grid); },
                          [&](const TemperedStableJumps& j) { return sampled(-j.alpha); },
                          [&](const CompoundPoissonJumps&) { return cell_average(); },
                          [&](const TabulatedTailJumps& j) {
                              if (j.tail.grid() == grid) return j.tail;
                              return j.tail.exponent() == 0.0 ? cell_average() : sampled(j.tail.exponent());
                          },
                          [&](const CustomJumps& j) { return sampled(std::min(0.0, j.tail_exponent)); },
                          [&](const StableJumps&) -> GridFunction {
                              throw Error(ErrorKind::NonConvergentIntegral, "stable nu-bar is not integrable");
                          },
                      },
                      jumps_);
}

GridFunction LevyModel::integrated_tail_on(const Grid& grid) const {
    if (!has_finite_mean()) throw Error(ErrorKind::NonConvergentIntegral, "int_[1,inf) y nu(dy) diverges");
    const double s = integrated_tail_exponent();
    if (const auto* st = std::get_if<StableJumps>(&jumps_))
        return GridFunction::power(grid, s, 1.0 / std::tgamma(2.0 - st->alpha));
    if (const auto* cj = std::get_if<CustomJumps>(&jumps_); cj && !cj->integrated_tail) {
        // accumulate from the right: one infinite integral plus per-cell pieces
        std::vector<double> v(grid.count);
        std::size_t last = grid.count - 1;
        v[last] = integrate_to_infinity(cj->tail, grid.node(last));
        for (std::size_t j = last; j-- > 0;) v[j] = v[j + 1] + tail_integral(grid.node(j), grid.node(j + 1));
        for (std::size_t j = 0; j < grid.count; ++j) v[j] *= std::pow(grid.node(j), -s);
        return GridFunction(grid, std::move(v), s);
    }
    GridFunction f = GridFunction::sample(grid, [&](double x) { return integrated_tail(x) * std::pow(x, -s); }, s);
    return with_cell_averages(f, [&](double lo, double hi) {
        boost::math::quadrature::tanh_sinh<double> quad;
        // the closed forms cancel catastrophically at the far left of the first cell
        return quad.integrate([&](double x) {
            double v = integrated_tail(x);
            return std::isfinite(v) ? v : 0.0;
        }, lo, hi);
    });
}

MeasureTruncation LevyModel::truncate_measure(double z, const Grid& grid) const {
    if (!(z >= 1.0) || !std::isfinite(z)) throw Error(ErrorKind::InvalidArgument, "truncation level must be >= 1");
    MeasureTruncation out;
    const double tail_z = tail(z);
    out.mass = tail_z;

    // small part: int_x^z nu-bar - (z - x) nu-bar(z), built from z downwards
    double s = integrated_tail_exponent();
    if (std::holds_alternative<TemperedStableJumps>(jumps_) && !has_finite_mean()) s = 0.0;
    std::vector<double> small(grid.count, 0.0);
    std::size_t top = grid.count;
    while (top > 0 && grid.node(top - 1) >= z) --top;
    if (top > 0) {
        double acc = tail_integral(grid.node(top - 1), z);
        for (std::size_t j = top; j-- > 0;) {
            if (j + 1 < top) acc += tail_integral(grid.node(j), grid.node(j + 1));
            double x = grid.node(j);
            small[j] = (acc - (z - x) * tail_z) * std::pow(x, -s);
        }
    }
    out.small_integrated_tail = GridFunction(grid, std::move(small), s);

    // large part on the working grid; Poisson atoms stay exact
    std::vector<Atom> atoms;
    std::vector<double> dens(grid.count, 0.0);
    bool any_density = false;
    auto density_cells = [&](const std::function<double(double)>& above) {
        for (std::size_t j = 0; j < grid.count; ++j) {
            double hi = grid.cell_hi(j);
            if (hi <= z) continue;
            double lo = std::max(grid.cell_lo(j), z);
            double m = above(lo) - above(hi);
            if (m != 0.0) any_density = true;
            dens[j] = m / grid.step;
        }
    };
    if (const auto* cp = std::get_if<CompoundPoissonJumps>(&jumps_)) {
        for (const Atom& a : cp->law.atoms())
            if (a.location >= z) atoms.push_back({a.location, cp->rate * a.mass});
        if (table_->density) density_cells([&](double x) { return table_->density_above(x, 0); });
        out.c_double_prime_z = c_ - (table_->moment_above(1.0) - table_->moment_above(z));
    } else {
        if (tail_z > 0.0) density_cells([&](double x) { return tail(x); });
        // int_[1,z) y nu(dy) = nu-bar(1) - z nu-bar(z) + int_1^z nu-bar
        out.c_double_prime_z = c_ - (tail(1.0) - z * tail_z + tail_integral(1.0, z));
    }
    std::optional<GridFunction> density;
    if (any_density) density = GridFunction(grid, std::move(dens), 0.0);
    out.large_jumps = MixedDistribution(std::move(atoms), std::move(density));
    return out;
}

LevyModel LevyModel::tilted(double phi) const {
    if (!(phi >= 0.0) || !std::isfinite(phi)) throw Error(ErrorKind::InvalidArgument, "tilt needs phi >= 0");
    if (phi == 0.0) return *this;
    JumpMeasure jumps = std::visit(
        overloaded{
            [](const NoJumps&) -> JumpMeasure { return NoJumps{}; },
            [&](const StableJumps& j) -> JumpMeasure {
                return TemperedStableJumps{j.alpha, phi, 1.0 / std::tgamma(-j.alpha)};
            },
            [&](const TemperedStableJumps& j) -> JumpMeasure {
                return TemperedStableJumps{j.alpha, j.theta + phi, j.scale};
            },
            [&](const CompoundPoissonJumps& j) -> JumpMeasure {
                std::vector<Atom> atoms;
                for (const Atom& a : j.law.atoms()) {
                    double m = a.mass * std::exp(-phi * a.location);
                    if (m > 0.0) atoms.push_back({a.location, m});
                }
                std::optional<GridFunction> d;
                if (j.law.density()) d = j.law.density()->multiplied([&](double x) { return std::exp(-phi * x); });
                return CompoundPoissonJumps{j.rate, MixedDistribution(std::move(atoms), std::move(d))};
            },
            [&](const TabulatedTailJumps& j) -> JumpMeasure {
                // nu-bar_phi(x) = e^{-phi x} nu-bar(x) - phi int_x^inf e^{-phi y} nu-bar(y) dy
                const GridFunction& t = j.tail;
                const Grid& g = t.grid();
                const double s = t.exponent();
                std::vector<double> cell(g.count), r(g.count);
                for (std::size_t k = 0; k < g.count; ++k)
                    cell[k] = t.regular()[k] * exp_moment(g.cell_lo(k), g.cell_hi(k), s, phi);
                double suffix = 0.0;
                for (std::size_t k = g.count; k-- > 0;) {
                    double x = g.node(k);
                    double upper = suffix + t.regular()[k] * exp_moment(x, g.cell_hi(k), s, phi);
                    double v = std::exp(-phi * x) * t.value(k) - phi * upper;
                    r[k] = std::max(0.0, v) * std::pow(x, -s);
                    suffix += cell[k];
                }
                return TabulatedTailJumps{GridFunction(g, std::move(r), s)};
            },
            [&](const CustomJumps& j) -> JumpMeasure {
                auto base = j.tail;
                auto tilted_tail = [base, phi](double x) {
                    double upper = integrate_to_infinity([&](double y) { return std::exp(-phi * y) * base(y); }, x);
                    return std::exp(-phi * x) * base(x) - phi * upper;
                };
                return CustomJumps{tilted_tail, {}, j.tail_exponent};
            },
        },
        jumps_);
    if (has_bounded_variation()) return LevyModel(c_prime() + 2.0 * sigma2_ * phi, DriftConvention::CPrime, sigma2_, jumps);
    return LevyModel(psi_derivative(phi), DriftConvention::CDoublePrime, sigma2_, jumps);
}

std::optional<double> LevyModel::stable_index() const {
    if (const auto* s = std::get_if<StableJumps>(&jumps_)) return s->alpha;
    return std::nullopt;
}

std::string LevyModel::fingerprint() const {
    std::ostringstream os;
    const char* conv = convention_ == DriftConvention::C ? "c" : convention_ == DriftConvention::CPrime ? "c'" : "c''";
    os << conv << "=" << fmt(drift_) << " sigma2=" << fmt(sigma2_) << " jumps=";
    std::visit(overloaded{
                   [&](const NoJumps&) { os << "none"; },
                   [&](const StableJumps& j) { os << "stable(alpha=" << fmt(j.alpha) << ")"; },
                   [&](const TemperedStableJumps& j) {
                       os << "tempered_stable(alpha=" << fmt(j.alpha) << ",theta=" << fmt(j.theta)
                          << ",scale=" << fmt(j.scale) << ")";
                   },
                   [&](const CompoundPoissonJumps& j) {
                       os << "compound_poisson(rate=" << fmt(j.rate) << ",atoms=" << j.law.atoms().size()
                          << ",density=" << (j.law.density() ? "yes" : "no") << ",mass=" << fmt(j.law.total_mass())
                          << ")";
                   },
                   [&](const TabulatedTailJumps& j) {
                       os << "tabulated(h=" << fmt(j.tail.grid().step) << ",n=" << j.tail.size() << ")";
                   },
                   [&](const CustomJumps& j) { os << "custom(s=" << fmt(j.tail_exponent) << ")"; },
               },
               jumps_);
    return os.str();
}

}  // namespace scalefn
