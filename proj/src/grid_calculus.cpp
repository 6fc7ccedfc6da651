#include "scalefn/grid_calculus.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "scalefn/errors.hpp"
#include "scalefn/special.hpp"

namespace scalefn {

namespace {

constexpr double kFoldAbove = 8.0;
constexpr std::size_t kNear = 8;

// 4-point Gauss-Legendre on [0, 1]
constexpr std::array<double, 4> kXi = {0.5 - 0.5 * 0.8611363115940526, 0.5 - 0.5 * 0.3399810435848563,
                                       0.5 + 0.5 * 0.3399810435848563, 0.5 + 0.5 * 0.8611363115940526};
constexpr std::array<double, 4> kOmega = {0.5 * 0.3478548451374538, 0.5 * 0.6521451548625461,
                                          0.5 * 0.6521451548625461, 0.5 * 0.3478548451374538};

void require_same_grid(const GridFunction& f, const GridFunction& g) {
    if (!(f.grid() == g.grid())) throw Error(ErrorKind::GridMismatch, "operands live on different grids");
}

// Large exponents are moved into the regular factor; only the fractional
// part stays symbolic. Keeps K^s and x^s away from overflow.
GridFunction folded(const GridFunction& f) {
    double s = f.exponent();
    if (s <= kFoldAbove) return f;
    return f.with_exponent(s - std::floor(s));
}

bool is_nonneg_integer(double v) { return v >= 0.0 && v == std::floor(v); }

// fixed summation order so results do not depend on vector width
double dot(const double* x, const double* y, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += x[k] * y[k];
        s1 += x[k + 1] * y[k + 1];
        s2 += x[k + 2] * y[k + 2];
        s3 += x[k + 3] * y[k + 3];
    }
    for (; k < n; ++k) s0 += x[k] * y[k];
    return (s0 + s1) + (s2 + s3);
}

// K^a * sum_n C(a,n) (-1/K)^n / (b+n+1)  =  int_0^1 (K-u)^a u^b du,  K >= 2
double endpoint_series(double K, double a, double b) {
    double coef = 1.0, sum = 0.0, z = -1.0 / K, zn = 1.0;
    for (int n = 0; n < 400; ++n) {
        double term = coef * zn / (b + n + 1.0);
        sum += term;
        if (n > 2 && std::abs(term) <= 1e-17 * std::abs(sum)) break;
        coef *= (a - n) / (n + 1.0);
        zn *= z;
        if (coef == 0.0) break;
    }
    return std::pow(K, a) * sum;
}

// W(K, J) = int_J^{J+1} (K-u)^a u^b du in half-cell units
double exact_weight(std::size_t K, std::size_t J, double a, double b) {
    auto Kd = static_cast<double>(K);
    if (K == 1) return std::beta(a + 1.0, b + 1.0);
    if (J == 0) return endpoint_series(Kd, a, b);
    if (J + 1 == K) return endpoint_series(Kd, b, a);
    auto lo = static_cast<double>(J);
    return boost::math::quadrature::gauss<double, 10>::integrate(
        [&](double u) { return std::pow(Kd - u, a) * std::pow(u, b); }, lo, lo + 1.0);
}

std::vector<double> doubled(std::span<const double> r) {
    std::vector<double> out(2 * r.size());
    for (std::size_t j = 0; j < r.size(); ++j) out[2 * j] = out[2 * j + 1] = r[j];
    return out;
}

std::vector<double> reversed(std::vector<double> v) {
    std::reverse(v.begin(), v.end());
    return v;
}

// Exact antiderivative of a grid function, F(0) = 0.
class Antiderivative {
public:
    explicit Antiderivative(const GridFunction& f) : f_(f), cum_(f.size() + 1, 0.0) {
        auto cells = cell_integrals(f_);
        for (std::size_t j = 0; j < cells.size(); ++j) cum_[j + 1] = cum_[j] + cells[j];
    }

    double operator()(double x) const {
        if (x <= 0.0) return 0.0;
        const Grid& g = f_.grid();
        if (x >= g.x_max()) return cum_.back();
        auto j = std::min(static_cast<std::size_t>(x / g.step), g.count - 1);
        return cum_[j] + f_.regular()[j] * power_integral(g.cell_lo(j), x, f_.exponent());
    }

private:
    GridFunction f_;
    std::vector<double> cum_;
};

// mass * f(x - loc), stored as cell averages so that mass is conserved
GridFunction shifted(const GridFunction& f, double loc, double mass) {
    if (loc == 0.0) return f.scaled(mass);
    const Grid& g = f.grid();
    Antiderivative F(f);
    std::vector<double> out(g.count, 0.0);
    for (std::size_t i = 0; i < g.count; ++i) {
        double hi = g.cell_hi(i) - loc;
        if (hi <= 0.0) continue;
        double lo = std::max(0.0, g.cell_lo(i) - loc);
        out[i] = mass * (F(hi) - F(lo)) / g.step;
    }
    return GridFunction(g, std::move(out), 0.0);
}

}  // namespace

MixedDistribution::MixedDistribution(std::vector<Atom> atoms, std::optional<GridFunction> density)
    : density_(std::move(density)) {
    for (const Atom& a : atoms) {
        if (!(a.location >= 0.0) || !std::isfinite(a.location))
            throw Error(ErrorKind::InvalidArgument, "atom location must be finite and nonnegative");
        if (!(a.mass > 0.0) || !std::isfinite(a.mass))
            throw Error(ErrorKind::InvalidArgument, "atom mass must be finite and positive");
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& x, const Atom& y) { return x.location < y.location; });
    for (const Atom& a : atoms) {
        if (!atoms_.empty() &&
            std::abs(atoms_.back().location - a.location) <= 1e-12 * std::max(1.0, a.location))
            atoms_.back().mass += a.mass;
        else
            atoms_.push_back(a);
    }
}

MixedDistribution MixedDistribution::dirac(double location, double mass) {
    return MixedDistribution({Atom{location, mass}});
}

double MixedDistribution::atom_mass() const noexcept {
    double m = 0.0;
    for (const Atom& a : atoms_) m += a.mass;
    return m;
}

double MixedDistribution::density_mass() const { return density_ ? integral(*density_) : 0.0; }

MixedDistribution MixedDistribution::scaled(double c) const {
    std::vector<Atom> atoms = atoms_;
    for (Atom& a : atoms) a.mass *= c;
    std::optional<GridFunction> d;
    if (density_) d = density_->scaled(c);
    return MixedDistribution(std::move(atoms), std::move(d));
}

std::vector<double> cell_integrals(const GridFunction& f0) {
    GridFunction f = folded(f0);
    const Grid& g = f.grid();
    std::vector<double> out(g.count);
    double s = f.exponent();
    for (std::size_t j = 0; j < g.count; ++j) {
        double w = s == 0.0 ? g.step : power_integral(g.cell_lo(j), g.cell_hi(j), s);
        out[j] = f.regular()[j] * w;
    }
    return out;
}

namespace {

double integrate_to(const GridFunction& f0, std::optional<double> x, bool absolute) {
    GridFunction f = folded(f0);
    const Grid& g = f.grid();
    double upto = x.value_or(g.x_max());
    if (!(upto > 0.0) || upto > g.x_max() * (1.0 + 1e-12))
        throw Error(ErrorKind::InvalidArgument, "integration limit outside (0, x_max]");
    double s = f.exponent(), total = 0.0;
    for (std::size_t j = 0; j < g.count && g.cell_lo(j) < upto; ++j) {
        double r = f.regular()[j];
        if (absolute) r = std::abs(r);
        total += r * power_integral(g.cell_lo(j), std::min(g.cell_hi(j), upto), s);
    }
    return total;
}

}  // namespace

double l1_norm(const GridFunction& f, std::optional<double> x) { return integrate_to(f, x, true); }
double integral(const GridFunction& f, std::optional<double> x) { return integrate_to(f, x, false); }

double sup_norm(const GridFunction& f) {
    double m = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) m = std::max(m, std::abs(f.value(j)));
    return m;
}

double laplace_transform(const GridFunction& f0, double beta) {
    GridFunction f = folded(f0);
    const Grid& g = f.grid();
    double total = 0.0;
    for (std::size_t j = 0; j < g.count; ++j) {
        double r = f.regular()[j];
        if (r != 0.0) total += r * exp_moment(g.cell_lo(j), g.cell_hi(j), f.exponent(), beta);
    }
    return total;
}

GridFunction convolve(const GridFunction& f0, const GridFunction& g0) {
    require_same_grid(f0, g0);
    GridFunction f = f0, g = g0;
    if (f.exponent() + g.exponent() + 1.0 > kFoldAbove) {
        f = f.with_exponent(f.exponent() >= 1.0 ? f.exponent() - std::floor(f.exponent()) : f.exponent());
        g = g.with_exponent(g.exponent() >= 1.0 ? g.exponent() - std::floor(g.exponent()) : g.exponent());
    }
    const Grid& grid = f.grid();
    const std::size_t N = grid.count, L = 2 * N;
    const double a = f.exponent(), b = g.exponent(), s_out = a + b + 1.0;

    std::vector<double> rf2 = doubled(f.regular()), rg2 = doubled(g.regular());
    std::vector<double> result(N, 0.0);

    auto finish = [&](std::size_t i, double conv) {
        double K = 2.0 * static_cast<double>(i) + 1.0;
        // h'^{s_out} / x_i^{s_out} = K^{-s_out}
        result[i] = conv / std::pow(K, s_out);
    };

    if (a == 0.0 || b == 0.0) {
        // one factor is flat, so the exact cell moments of the other suffice
        std::vector<double> w(L);
        double e = a == 0.0 ? b : a;
        for (std::size_t J = 0; J < L; ++J) {
            auto lo = static_cast<double>(J);
            w[J] = e == 0.0 ? 1.0 : power_integral(lo, lo + 1.0, e);
        }
        std::vector<double> F = rf2, G = rg2;
        if (a == 0.0) {
            for (std::size_t J = 0; J < L; ++J) G[J] *= w[J];
        } else {
            for (std::size_t m = 0; m < L; ++m) F[m] *= w[m];
        }
        std::vector<double> Frev = reversed(std::move(F));
        for (std::size_t i = 0; i < N; ++i) {
            std::size_t K = 2 * i + 1;
            finish(i, dot(Frev.data() + (L - K), G.data(), K));
        }
        return GridFunction(grid, std::move(result), s_out);
    }

    // far field: separable 4-point Gauss-Legendre in u = J + xi
    std::array<std::vector<double>, 4> A, B, Frev, G;
    for (std::size_t p = 0; p < 4; ++p) {
        A[p].resize(L);
        B[p].resize(L);
        std::vector<double> F(L);
        G[p].resize(L);
        for (std::size_t m = 0; m < L; ++m) {
            auto md = static_cast<double>(m);
            A[p][m] = std::pow(md + 1.0 - kXi[p], a);
            B[p][m] = std::pow(md + kXi[p], b);
            F[m] = A[p][m] * rf2[m];
            G[p][m] = B[p][m] * rg2[m];
        }
        Frev[p] = reversed(std::move(F));
    }
    const bool near_origin = !is_nonneg_integer(b);
    const bool near_end = !is_nonneg_integer(a);

    std::vector<std::size_t> near;
    near.reserve(2 * kNear);
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t K = 2 * i + 1;
        double conv = 0.0;
        for (std::size_t p = 0; p < 4; ++p) conv += kOmega[p] * dot(Frev[p].data() + (L - K), G[p].data(), K);

        near.clear();
        if (near_origin)
            for (std::size_t J = 0; J < std::min(kNear, K); ++J) near.push_back(J);
        if (near_end)
            for (std::size_t m = 0; m < std::min(kNear, K); ++m) {
                std::size_t J = K - 1 - m;
                if (!(near_origin && J < kNear)) near.push_back(J);
            }
        for (std::size_t J : near) {
            std::size_t m = K - 1 - J;
            double w_gl = 0.0;
            for (std::size_t p = 0; p < 4; ++p) w_gl += kOmega[p] * A[p][m] * B[p][J];
            conv += (exact_weight(K, J, a, b) - w_gl) * rf2[m] * rg2[J];
        }
        finish(i, conv);
    }
    return GridFunction(grid, std::move(result), s_out);
}

GridFunction convolve_mixed(const GridFunction& f, const MixedDistribution& d) {
    GridFunction out = GridFunction::zero(f.grid(), f.exponent());
    bool first = true;
    auto add = [&](const GridFunction& term) {
        out = first ? term : out + term;
        first = false;
    };
    for (const Atom& atom : d.atoms()) {
        if (atom.location >= f.grid().x_max()) break;
        add(shifted(f, atom.location, atom.mass));
    }
    if (d.density()) add(convolve(f, *d.density()));
    return out;
}

MixedDistribution convolve_measures(const MixedDistribution& a, const MixedDistribution& b,
                                    const Grid& grid) {
    std::vector<Atom> atoms;
    for (const Atom& x : a.atoms())
        for (const Atom& y : b.atoms()) {
            double loc = x.location + y.location;
            if (loc <= grid.x_max()) atoms.push_back({loc, x.mass * y.mass});
        }
    std::optional<GridFunction> density;
    auto add = [&](const GridFunction& term) { density = density ? *density + term : term; };
    MixedDistribution a_atoms(a.atoms()), b_atoms(b.atoms());
    if (b.density()) {
        if (!(b.density()->grid() == grid)) throw Error(ErrorKind::GridMismatch, "density grid differs");
        if (!a.atoms().empty()) add(convolve_mixed(*b.density(), a_atoms));
    }
    if (a.density()) {
        if (!(a.density()->grid() == grid)) throw Error(ErrorKind::GridMismatch, "density grid differs");
        if (!b.atoms().empty()) add(convolve_mixed(*a.density(), b_atoms));
        if (b.density()) add(convolve(*a.density(), *b.density()));
    }
    return MixedDistribution(std::move(atoms), std::move(density));
}

GridFunction primitive(const GridFunction& f0) {
    GridFunction f = folded(f0);
    const Grid& g = f.grid();
    const double s = f.exponent(), p = s + 1.0;
    // work in units of h so the x^p normalisation cannot underflow
    std::vector<double> out(g.count);
    double cum = 0.0;
    for (std::size_t i = 0; i < g.count; ++i) {
        auto lo = static_cast<double>(i);
        double r = f.regular()[i];
        double half = power_integral(lo, lo + 0.5, s);
        out[i] = (cum + r * half) / std::pow(lo + 0.5, p);
        cum += r * power_integral(lo, lo + 1.0, s);
    }
    return GridFunction(g, std::move(out), p);
}

GridFunction derivative(const GridFunction& f) {
    const Grid& g = f.grid();
    const std::size_t N = g.count;
    if (N < 3) throw Error(ErrorKind::InvalidArgument, "derivative needs at least three nodes");
    const double s = f.exponent(), h = g.step;
    if (s != 0.0 && s - 1.0 <= -1.0)
        throw Error(ErrorKind::InvalidArgument, "derivative would not be locally integrable");
    auto r = f.regular();
    std::vector<double> dr(N);
    dr[0] = (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h);
    dr[N - 1] = (3.0 * r[N - 1] - 4.0 * r[N - 2] + r[N - 3]) / (2.0 * h);
    for (std::size_t j = 1; j + 1 < N; ++j) dr[j] = (r[j + 1] - r[j - 1]) / (2.0 * h);
    if (s == 0.0) return GridFunction(g, std::move(dr), 0.0);
    for (std::size_t j = 0; j < N; ++j) dr[j] = s * r[j] + g.node(j) * dr[j];
    return GridFunction(g, std::move(dr), s - 1.0);
}

GridFunction frac_integral(const GridFunction& f, double mu) {
    if (!(mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "fractional order must be positive");
    return convolve(GridFunction::power(f.grid(), mu - 1.0), f).scaled(1.0 / std::tgamma(mu));
}

GridFunction frac_derivative(const GridFunction& f, double mu) {
    if (!(mu > 0.0 && mu < 1.0)) throw Error(ErrorKind::InvalidArgument, "fractional order must lie in (0,1)");
    return derivative(frac_integral(f, 1.0 - mu));
}

}  // namespace scalefn
