#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "scalefn/verify.hpp"

using namespace scalefn;

namespace {

// --- oracles ---------------------------------------------------------------

// Ruin under exponential claims (mean mu, rate lambda, premium c):
// (lambda mu / c) e^{-(1/mu - lambda/c) x}.
double exp_ruin_oracle(double c, double lambda, double mu, double x) {
    return lambda * mu / c * std::exp(-(1.0 / mu - lambda / c) * x);
}

// Sum of n geometric(p) variables on {1, 2, ...} is negative binomial.
double negative_binomial(int k, int n, double p) {
    if (k < n) return 0.0;
    double log_binom = std::lgamma(k) - std::lgamma(n) - std::lgamma(k - n + 1.0);
    return std::exp(log_binom + n * std::log(p) + (k - n) * std::log1p(-p));
}

// P(xi_1 + ... + xi_n = k | all xi_i >= 1), xi Poisson(mu), by enumeration.
double ztp_enumerated(int k, int n, double mu) {
    if (n == 0) return k == 0 ? 1.0 : 0.0;
    double s = 0.0;
    for (int first = 1; first <= k - (n - 1); ++first)
        s += std::exp(first * std::log(mu) - std::lgamma(first + 1.0)) / std::expm1(mu) * ztp_enumerated(k - first, n - 1, mu);
    return s;
}

// --- helpers ---------------------------------------------------------------

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::InvalidArgument;
}

LevyModel exp_claims(double c_prime, double rate, double mean = 1.0, double x_max = 40.0) {
    Grid g = Grid::covering(1.0 / 1024, x_max);
    auto density = GridFunction::sample(g, [mean](double x) { return std::exp(-x / mean) / mean; });
    return LevyModel(c_prime, DriftConvention::CPrime, 0.0, CompoundPoissonJumps{rate, MixedDistribution({}, density)});
}

// compactly supported on [0, L]: x^s (1 - x/L)^3 (1 + a x)
GridFunction bump(const Grid& g, double s, double L, double a) {
    return GridFunction::sample(
        g, [=](double x) { return x < L ? std::pow(1.0 - x / L, 3) * (1.0 + a * x) : 0.0; }, s);
}

}  // namespace

TEST_CASE("laplace_transform examples") {
    Grid g = Grid::covering(1.0 / 1024, 40.0);
    auto e = GridFunction::sample(g, [](double x) { return std::exp(-x); });
    CHECK(laplace_transform(e, 1.0) == doctest::Approx(0.5).epsilon(1e-6));
    auto id = GridFunction::power(g, 1.0);
    CHECK(laplace_transform(id, 2.0) == doctest::Approx(0.25).epsilon(1e-6));
    Grid g30 = Grid::covering(1.0 / 1024, 30.0);
    auto rs = GridFunction::power(g30, -0.5);
    CHECK(std::abs(laplace_transform(rs, 1.0) - std::sqrt(M_PI)) < 1e-3);
}

TEST_CASE("property: laplace_transform is linear") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 120; ++i) {
        Grid g = Grid::covering(1.0 / 64, 5.0 + 10.0 * U(rng));
        std::vector<double> rf(g.count), rg(g.count);
        for (auto& v : rf) v = 2.0 * U(rng) - 1.0;
        for (auto& v : rg) v = 2.0 * U(rng) - 1.0;
        // one exponent: combine() of mixed exponents re-samples, which is not the point here
        double s = 1.5 * U(rng) - 0.7;
        GridFunction f(g, rf, s), h(g, rg, s);
        double a = 4.0 * U(rng) - 2.0, b = 4.0 * U(rng) - 2.0, beta = 0.1 + 5.0 * U(rng);
        double lf = laplace_transform(f, beta), lh = laplace_transform(h, beta);
        double lhs = laplace_transform(combine(a, f, b, h), beta);
        double scale = std::abs(a * lf) + std::abs(b * lh);
        CHECK(std::abs(lhs - (a * lf + b * lh)) <= 1e-12 * scale + 1e-300);
    }
}

TEST_CASE("property: convolution theorem on compact support") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Grid g = Grid::covering(1.0 / 512, 6.0);
    for (int i = 0; i < 100; ++i) {
        // supports in [0, 3] keep f * g inside the grid: no truncation term
        auto f = bump(g, 1.2 * U(rng) - 0.6, 0.5 + 2.5 * U(rng), 2.0 * U(rng) - 0.5);
        auto h = bump(g, 1.2 * U(rng) - 0.6, 0.5 + 2.5 * U(rng), 2.0 * U(rng) - 0.5);
        double beta = 0.2 + 4.0 * U(rng);
        double lhs = laplace_transform(convolve(f, h), beta);
        double rhs = laplace_transform(f, beta) * laplace_transform(h, beta);
        CHECK(std::abs(lhs - rhs) < 1e-3 * std::abs(rhs) + 1e-6);
    }
}

TEST_CASE("property: derivative rule") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Grid g = Grid::covering(1.0 / 1024, 5.0);
    for (int i = 0; i < 100; ++i) {
        double L = 1.0 + 3.0 * U(rng), a = 2.0 * U(rng) - 0.5, beta = 0.2 + 4.0 * U(rng);
        auto f = bump(g, 0.0, L, a);
        // L[f'] = beta L[f] - f(0+), with f(0+) = 1
        double lhs = laplace_transform(derivative(f), beta);
        double rhs = beta * laplace_transform(f, beta) - 1.0;
        CHECK(std::abs(lhs - rhs) < 1e-3 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("verify_scale examples") {
    SUBCASE("Brownian with W = id is exact") {
        Grid g = Grid::covering(1.0 / 256, 50.0);
        auto model = LevyModel::brownian(0.0, 1.0);
        auto t = scale_closed_form(model, 0.0, g);
        auto chk = verify_scale(model, 0.0, t, 1e-2);
        CHECK(chk.passed);
        CHECK(chk.max_residual() < 1e-8);
        CHECK(chk.betas.size() == 8);
        for (double b : chk.betas) CHECK(b > model.phi(0.0));
        CHECK(chk.betas.back() == doctest::Approx(10.0 * chk.betas.front()));
    }
    SUBCASE("stable closed form") {
        Grid g = Grid::covering(1.0 / 1024, 50.0);
        auto model = LevyModel::stable(1.5);
        auto t = scale_closed_form(model, 0.0, g);
        auto chk = verify_scale(model, 0.0, t, 1e-2);
        CHECK(chk.passed);
        CHECK(chk.max_residual() < 1e-2);

        SUBCASE("negative control: 5% too large") {
            ScaleTable bad = t;
            bad.W = t.W.scaled(1.05);
            auto c = verify_scale(model, 0.0, bad, 1e-2);
            CHECK_FALSE(c.passed);
            CHECK(c.max_residual() == doctest::Approx(0.05).epsilon(0.05));
        }
    }
    SUBCASE("a table too short for its growth") {
        Grid g = Grid::covering(1.0 / 64, 2.0);
        auto model = LevyModel::brownian(1.0, 1.0);
        auto t = scale_closed_form(model, 0.0, g);
        std::vector<double> r = t.W.values();
        r.back() = 1e40;  // a wild last sample blows the tail bound
        t.W = GridFunction(g, r, 0.0);
        CHECK(kind_of([&] { verify_scale(model, 0.0, t, 1e-2); }) == ErrorKind::DomainTooShort);
    }
    CHECK(kind_of([] {
              Grid g = Grid::covering(1.0 / 64, 10.0);
              verify_laplace_identity([](double b) { return b; }, 0.0, 0.0, GridFunction::constant(g, 1.0), 0.0);
          }) == ErrorKind::InvalidArgument);
}

TEST_CASE("ruin probability examples") {
    auto m = exp_claims(2.0, 1.0);
    CHECK(ruin_probability(m, 0.0) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(ruin_probability(m, 2.0) == doctest::Approx(0.1839397).epsilon(1e-4));
    CHECK(kind_of([] { ruin_probability(exp_claims(0.5, 1.0), 1.0); }) == ErrorKind::NetProfitViolated);
    CHECK(kind_of([] { ruin_probability(exp_claims(1.0, 1.0), 1.0); }) == ErrorKind::NetProfitViolated);
    CHECK(kind_of([] { ruin_probability(LevyModel::brownian(1.0, 1.0), 1.0); }) == ErrorKind::RegimeMismatch);
    CHECK(kind_of([&] { ruin_probability(m, -1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("property: ruin probability is a nonincreasing probability") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        double rate = 0.2 + 2.0 * U(rng), mean = 0.3 + 1.2 * U(rng);
        double c = rate * mean * (1.1 + 2.0 * U(rng));  // net profit
        CAPTURE(rate);
        CAPTURE(mean);
        CAPTURE(c);
        auto m = exp_claims(c, rate, mean, 30.0);
        Grid g = Grid::covering(1.0 / 128, 10.0);
        auto r = ruin_probability_on(m, g);
        bool in_range = true, monotone = true;
        double worst = 0.0;
        for (std::size_t j = 0; j < g.count; ++j) {
            double v = r.value(j);
            in_range = in_range && v >= -1e-9 && v <= 1.0 + 1e-9;
            if (j > 0) monotone = monotone && v <= r.value(j - 1) + 1e-9;
            worst = std::max(worst, std::abs(v - exp_ruin_oracle(c, rate, mean, g.node(j))));
        }
        CHECK(in_range);
        CHECK(monotone);
        CHECK(r.value(g.count - 1) < r.value(0));
        CHECK(worst < 1e-2);
    }
}

TEST_CASE("kappa classifier") {
    Grid g = Grid::covering(1.0 / 1024, 1.0);
    CHECK(kappa_classifier(GridFunction::constant(g, 1.0)) == 2);
    CHECK(kappa_classifier(GridFunction::power(g, -0.5)) == 1);
    CHECK(kappa_classifier(GridFunction::power(g, -0.3)) == 2);
    CHECK(kappa_classifier(GridFunction::power(g, -0.9, 3.0)) == 1);
    Grid coarse = Grid::covering(1.0 / 16, 1.0);
    CHECK(kind_of([&] { kappa_classifier(GridFunction::constant(coarse, 1.0)); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("brute-force pmf examples") {
    auto d3 = brute_force_convolution_pmf({0.0, 1.0}, 3);
    REQUIRE(d3.size() == 4);
    CHECK(d3[3] == doctest::Approx(1.0));
    CHECK(d3[0] + d3[1] + d3[2] == 0.0);

    auto geo = brute_force_convolution_pmf(geometric_pmf(0.5), 2);
    CHECK(geo[3] == doctest::Approx(0.25).epsilon(1e-12));

    auto ztp = brute_force_convolution_pmf(zero_truncated_poisson_pmf(1.0), 2);
    CHECK(ztp[2] == doctest::Approx(0.3386969).epsilon(1e-7));
    CHECK(ztp[2] == doctest::Approx(ztp_enumerated(2, 2, 1.0)).epsilon(1e-12));

    CHECK(brute_force_convolution_pmf({0.3, 0.7}, 0) == std::vector<double>{1.0});
    CHECK(kind_of([] { brute_force_convolution_pmf({1.0}, -1); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { geometric_pmf(0.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { zero_truncated_poisson_pmf(-1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("property: brute-force powers match closed forms") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        double p = 0.2 + 0.7 * U(rng), mu = 0.3 + 2.5 * U(rng);
        int n = 1 + static_cast<int>(6 * U(rng));
        auto geo = brute_force_convolution_pmf(geometric_pmf(p), n);
        auto ztp = brute_force_convolution_pmf(zero_truncated_poisson_pmf(mu), n);
        double mass = 0.0;
        for (double v : geo) mass += v;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        for (int k = 0; k <= 14; ++k) {
            double gk = k < static_cast<int>(geo.size()) ? geo[k] : 0.0;
            double zk = k < static_cast<int>(ztp.size()) ? ztp[k] : 0.0;
            CHECK(std::abs(gk - negative_binomial(k, n, p)) < 1e-13);
            CHECK(std::abs(zk - ztp_enumerated(k, n, mu)) < 1e-13);
        }
    }
}
