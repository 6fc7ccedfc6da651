#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "scalefn/grid_calculus.hpp"
#include "scalefn/series.hpp"

using namespace scalefn;

namespace {

// L[a x^s e^{-c x}](beta)
double power_exp_laplace(double a, double s, double c, double beta) {
    return a * std::tgamma(s + 1.0) / std::pow(beta + c, s + 1.0);
}

// L[1 * sum_n f^(*n) / b^(n+1)](beta) = 1 / (beta (b - L[f](beta)))
double geometric_series_laplace(double lf, double b, double beta) { return 1.0 / (beta * (b - lf)); }

}  // namespace

TEST_CASE("series examples") {
    Grid g = Grid::covering(1.0 / 1024, 2.0);
    SUBCASE("exp") {
        SeriesSpec spec{GridFunction::constant(g, 1.0), GeometricWeights{1.0}, GridFunction::constant(g, 1.0)};
        auto r = convolution_series(spec);
        CHECK(r.report.converged);
        CHECK(r.sum(1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-6));
        CHECK(r.sum(2.0) == doctest::Approx(std::exp(2.0)).epsilon(1e-6));
    }
    SUBCASE("one minus exp") {
        SeriesSpec spec{GridFunction::constant(g, -1.0), GeometricWeights{1.0}, GridFunction::power(g, 1.0)};
        auto r = convolution_series(spec);
        CHECK(r.sum(1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-6));
        CHECK(r.sum(1.0) == doctest::Approx(0.6321206).epsilon(1e-7));
    }
    SUBCASE("zero term leaves the kernel") {
        SeriesSpec spec{GridFunction::zero(g), GeometricWeights{1.0}, GridFunction::power(g, 1.0)};
        auto r = convolution_series(spec);
        CHECK(r.report.converged);
        CHECK(r.report.terms_used == 1);
        for (double x : {0.25, 1.0, 1.9}) CHECK(r.sum(x) == doctest::Approx(x));
    }
    SUBCASE("delta kernel keeps the n = 0 weight apart") {
        SeriesSpec spec{GridFunction::constant(g, 1.0), GeometricWeights{2.0}};
        auto r = convolution_series(spec);
        CHECK(r.origin_atom == doctest::Approx(0.5));
        // sum_{n>=1} x^{n-1}/(n-1)! / 2^{n+1} = e^{x/2} / 4
        CHECK(r.sum(1.0) == doctest::Approx(std::exp(0.5) / 4.0).epsilon(1e-6));
    }
    SUBCASE("explicit weights make a finite sum") {
        SeriesSpec spec{GridFunction::constant(g, 1.0), std::vector<double>{0.0, 1.0, 1.0},
                        GridFunction::constant(g, 1.0)};
        auto r = convolution_series(spec);
        CHECK(r.report.converged);
        CHECK(r.report.terms_used == 3);
        // 1 * (1 + id) = x + x^2/2
        CHECK(r.sum(1.5) == doctest::Approx(1.5 + 1.125).epsilon(1e-6));
    }
}

TEST_CASE("series reports non-convergence with the partial sum") {
    Grid g = Grid::covering(1.0 / 64, 10.0);
    SeriesSpec spec{GridFunction::constant(g, 1.0), GeometricWeights{1.0}, GridFunction::constant(g, 1.0)};
    spec.max_terms = 3;
    try {
        convolution_series(spec);
        FAIL("expected SeriesNotConverged");
    } catch (const SeriesNotConverged& e) {
        CHECK(e.kind() == ErrorKind::NotConverged);
        CHECK(e.partial().report.terms_used == 4);
        CHECK_FALSE(e.partial().report.converged);
        // 1 + x + x^2/2 + x^3/6 at x = 1
        CHECK(e.partial().sum(1.0) == doctest::Approx(1.0 + 1.0 + 0.5 + 1.0 / 6.0).epsilon(1e-4));
    }
    CHECK_THROWS_AS(SeriesMonitor(0.0, 5), Error);
    CHECK_THROWS_AS(SeriesMonitor(1e-3, 0), Error);
}

TEST_CASE("stopping rule waits for three decreases") {
    SeriesMonitor m(1e-3, 50);
    CHECK_FALSE(m.record(1e-5));  // small but no history yet
    CHECK_FALSE(m.record(1e-6));
    CHECK_FALSE(m.record(1e-7));
    CHECK(m.record(1e-8));
    SeriesMonitor p(1e-3, 50);
    CHECK_FALSE(p.record(1e-4));
    CHECK_FALSE(p.record(2e-4));  // plateau resets the count
    CHECK_FALSE(p.record(1e-4));
    CHECK_FALSE(p.record(1e-5));
    CHECK(p.record(1e-6));
    SeriesMonitor z(1e-3, 50);
    CHECK(z.record(0.0));
}

TEST_CASE("series properties") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Grid g = Grid::covering(1.0 / 128, 8.0);
    int cases = 0;
    for (int it = 0; it < 120; ++it) {
        double a = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.2 + 0.8 * u(rng));
        double s = u(rng) < 0.3 ? -0.5 + 0.4 * u(rng) : 0.0;
        double c = 0.5 + 2.0 * u(rng);
        double b = 1.0 + 2.0 * u(rng);
        auto f = GridFunction::sample(g, [&](double x) { return a * std::exp(-c * x); }, s);
        SeriesSpec spec{f, GeometricWeights{b}, GridFunction::constant(g, 1.0)};
        auto r = convolution_series(spec);
        REQUIRE(r.report.converged);
        ++cases;

        // defining transform, truncation negligible for beta >= 5
        for (double beta : {5.0, 8.0}) {
            double want = geometric_series_laplace(power_exp_laplace(a, s, c, beta), b, beta);
            CHECK(laplace_transform(r.sum, beta) == doctest::Approx(want).epsilon(2e-3));
        }

        // term norms eventually strictly decreasing
        const auto& t = r.report.term_l1;
        REQUIRE(t.size() >= 3);
        for (std::size_t k = t.size() - 3; k + 1 < t.size(); ++k) CHECK(t[k + 1] < t[k]);

        // partial-sum stability: five more terms move the answer by at most the tail bound
        SeriesSpec more = spec;
        more.tolerance = 1e-300;
        more.max_terms = r.report.terms_used - 1 + 5;
        GridFunction longer;
        try {
            longer = convolution_series(more).sum;
        } catch (const SeriesNotConverged& e) {
            longer = e.partial().sum;
        }
        double dev = sup_norm(longer - r.sum);
        CHECK(dev <= r.report.tail_bound + 1e-12);

        // associativity: f^(*4) iteratively and by squaring
        if (it % 4 == 0) {
            auto f2 = convolve(f, f);
            auto iter = convolve(convolve(f2, f), f);
            auto sq = convolve(f2, f2);
            double scale = std::max(1e-12, sup_norm(sq));
            CHECK(sup_norm(iter - sq) / scale < 10.0 * g.step);
        }
    }
    CHECK(cases >= 100);
}
