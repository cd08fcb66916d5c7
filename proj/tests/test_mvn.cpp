#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "profs/mvn.hpp"

using profs::mvn::CorrelationMatrix;
using profs::mvn::standard_normal_cdf;
using profs::mvn::standard_normal_quantile;
using profs::mvn::symmetric_rectangle_probability;

namespace {

// Newton refinement of the quantile against the erfc-based CDF gives an
// independent reference accurate to ~1e-14. The upper half is mapped to the
// lower half by symmetry: 1 - u is exact for u >= 1/2 (Sterbenz), and the CDF
// only has absolute ulp(1) resolution near 1, which would cap the reference at
// ~3e-5 accuracy in the far upper tail if solved there directly.
double reference_quantile(double u) {
    if (u > 0.5) return -reference_quantile(1.0 - u);
    double x = 0.0;
    // bisection bracket, then Newton
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (standard_normal_cdf(mid) < u) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x = 0.5 * (lo + hi);
    for (int i = 0; i < 4; ++i) {
        const double f = standard_normal_cdf(x) - u;
        const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
        if (pdf <= 0.0) break;
        x -= f / pdf;
    }
    return x;
}

CorrelationMatrix equicorrelated(int p, double rho) {
    std::vector<std::vector<double>> m(p, std::vector<double>(p, rho));
    for (int i = 0; i < p; ++i) m[i][i] = 1.0;
    return CorrelationMatrix(m);
}

}  // namespace

TEST_CASE("normal cdf reference values") {
    CHECK(standard_normal_cdf(0.0) == 0.5);
    CHECK(standard_normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
    CHECK(std::abs(standard_normal_cdf(1.0) - 0.8413447460685429) < 1e-12);
    CHECK(std::abs(standard_normal_cdf(2.0) - 0.9772498680518208) < 1e-12);
    CHECK(std::abs(standard_normal_cdf(2.5) - 0.9937903346742238) < 1e-12);
    CHECK(std::abs(standard_normal_cdf(1.959963984540054) - 0.975) < 1e-12);
    CHECK(standard_normal_cdf(-8.0) < 1e-14);
    CHECK(standard_normal_cdf(-40.0) == 0.0);
    CHECK(standard_normal_cdf(40.0) == 1.0);
}

TEST_CASE("normal cdf is monotone nondecreasing") {
    double prev = -1.0;
    for (double x = -12.0; x <= 12.0; x += 0.001) {
        const double v = standard_normal_cdf(x);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("normal quantile reference values") {
    CHECK(standard_normal_quantile(0.5) == 0.0);
    CHECK(standard_normal_quantile(0.975) ==
          doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(standard_normal_quantile(0.8413447) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK_THROWS_AS(standard_normal_quantile(0.0), std::invalid_argument);
    CHECK_THROWS_AS(standard_normal_quantile(1.0), std::invalid_argument);
    CHECK_THROWS_AS(standard_normal_quantile(-0.25), std::invalid_argument);
}

TEST_CASE("normal quantile relative error stays below 1e-9") {
    std::vector<double> grid;
    for (double e = -12.0; e < -0.31; e += 0.25) grid.push_back(std::pow(10.0, e));
    for (double u = 0.001; u < 0.5; u += 0.003) grid.push_back(u);
    for (double u : std::vector<double>(grid)) grid.push_back(1.0 - u);
    grid.push_back(0.5 + 1e-9);
    grid.push_back(0.5 - 1e-9);
    for (double u : grid) {
        const double got = standard_normal_quantile(u);
        const double want = reference_quantile(u);
        const double scale = std::max(std::abs(want), 1e-3);
        CHECK(std::abs(got - want) / scale <= 1e-9);
    }
}

TEST_CASE("normal quantile round-trips the cdf") {
    for (double e = -12.0; e <= -0.302; e += 0.1) {
        const double u = std::pow(10.0, e);
        CHECK(std::abs(standard_normal_cdf(standard_normal_quantile(u)) - u) <= 1e-8);
        CHECK(std::abs(standard_normal_cdf(standard_normal_quantile(1.0 - u)) -
                       (1.0 - u)) <= 1e-8);
    }
}

TEST_CASE("correlation matrix validation") {
    CHECK_THROWS_AS(CorrelationMatrix(std::vector<std::vector<double>>{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        CorrelationMatrix(std::vector<std::vector<double>>{{1.0, 0.2}}),
        std::invalid_argument);
    CHECK_THROWS_AS(CorrelationMatrix({{0.9, 0.0}, {0.0, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CorrelationMatrix({{1.0, 0.3}, {0.5, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CorrelationMatrix({{1.0, 1.5}, {1.5, 1.0}}),
                    std::invalid_argument);
    // genuinely indefinite within [-1, 1] entries
    const double r = 0.62 - 1e-6;
    CHECK_THROWS_AS(CorrelationMatrix({{1.0, 0.9, 0.9},
                                       {0.9, 1.0, r},
                                       {0.9, r, 1.0}}),
                    std::runtime_error);
}

TEST_CASE("tiny eigenvalue violations are repaired and flagged") {
    const double r = 0.62 - 5e-10;
    CorrelationMatrix omega({{1.0, 0.9, 0.9}, {0.9, 1.0, r}, {0.9, r, 1.0}});
    CHECK(omega.adjusted());
    const auto est = symmetric_rectangle_probability(omega, 2.0, 1e-4, 11);
    CHECK(est.correlation_adjusted);
    CHECK(est.value >= 0.0);
    CHECK(est.value <= 1.0);
}

TEST_CASE("rectangle probability: exact univariate branch") {
    CorrelationMatrix one(std::vector<std::vector<double>>{{1.0}});
    const auto est = symmetric_rectangle_probability(one, 1.959964, 1e-6, 1);
    CHECK(est.value == doctest::Approx(0.95).epsilon(1e-6));
    CHECK(est.error_estimate == 0.0);
    CHECK(est.converged);
}

TEST_CASE("rectangle probability: z = 0 gives probability 0") {
    const auto est = symmetric_rectangle_probability(equicorrelated(3, 0.4), 0.0,
                                                     1e-4, 1);
    CHECK(est.value == 0.0);
}

TEST_CASE("rectangle probability: independent bivariate product") {
    const auto est = symmetric_rectangle_probability(equicorrelated(2, 0.0),
                                                     1.959964, 1e-5, 42);
    CHECK(est.value == doctest::Approx(0.9025).epsilon(2e-5));
    CHECK(est.error_estimate <= 1e-5);
    CHECK(est.converged);
    CHECK(est.samples_used > 0);
}

TEST_CASE("rectangle probability agrees with plain Monte Carlo") {
    const std::vector<std::vector<double>> raw{
        {1.0, 0.5, 0.5}, {0.5, 1.0, 0.5}, {0.5, 0.5, 1.0}};
    const auto est =
        symmetric_rectangle_probability(CorrelationMatrix(raw), 2.0, 1e-5, 7);
    const auto [mc, se] = oracle::mc_rectangle(raw, 2.0, 10'000'000, 1234);
    CHECK(std::abs(est.value - mc) <= 3.0 * se + est.error_estimate);
}

TEST_CASE("rectangle probability is monotone in z up to reported error") {
    const auto omega = equicorrelated(4, 0.3);
    const auto lo = symmetric_rectangle_probability(omega, 1.5, 1e-5, 3);
    const auto hi = symmetric_rectangle_probability(omega, 2.0, 1e-5, 3);
    CHECK(lo.value <= hi.value + lo.error_estimate + hi.error_estimate);
    CHECK(hi.value > lo.value);  // far apart, must hold outright
}

TEST_CASE("rectangle probability is permutation invariant up to error") {
    const std::vector<std::vector<double>> raw{
        {1.0, 0.6, 0.2}, {0.6, 1.0, 0.4}, {0.2, 0.4, 1.0}};
    // permutation (2, 0, 1)
    const std::vector<std::vector<double>> perm{
        {1.0, 0.2, 0.4}, {0.2, 1.0, 0.6}, {0.4, 0.6, 1.0}};
    const auto a =
        symmetric_rectangle_probability(CorrelationMatrix(raw), 1.9, 1e-5, 21);
    const auto b =
        symmetric_rectangle_probability(CorrelationMatrix(perm), 1.9, 1e-5, 22);
    CHECK(std::abs(a.value - b.value) <=
          a.error_estimate + b.error_estimate + 1e-6);
}

TEST_CASE("block-diagonal correlation factorizes") {
    const std::vector<std::vector<double>> block4{{1.0, 0.6, 0.0, 0.0},
                                                  {0.6, 1.0, 0.0, 0.0},
                                                  {0.0, 0.0, 1.0, -0.3},
                                                  {0.0, 0.0, -0.3, 1.0}};
    const auto whole =
        symmetric_rectangle_probability(CorrelationMatrix(block4), 1.8, 1e-5, 5);
    const auto first = symmetric_rectangle_probability(
        CorrelationMatrix({{1.0, 0.6}, {0.6, 1.0}}), 1.8, 1e-5, 6);
    const auto second = symmetric_rectangle_probability(
        CorrelationMatrix({{1.0, -0.3}, {-0.3, 1.0}}), 1.8, 1e-5, 7);
    CHECK(std::abs(whole.value - first.value * second.value) <=
          whole.error_estimate + first.error_estimate + second.error_estimate +
              1e-6);
}

TEST_CASE("rectangle probability is deterministic for fixed inputs") {
    const auto omega = equicorrelated(5, 0.45);
    const auto a = symmetric_rectangle_probability(omega, 2.2, 1e-5, 909);
    const auto b = symmetric_rectangle_probability(omega, 2.2, 1e-5, 909);
    CHECK(a.value == b.value);
    CHECK(a.error_estimate == b.error_estimate);
    CHECK(a.samples_used == b.samples_used);
    const auto c = symmetric_rectangle_probability(omega, 2.2, 1e-5, 910);
    CHECK(c.value != a.value);  // seed actually matters
    CHECK(std::abs(c.value - a.value) <= c.error_estimate + a.error_estimate);
}

TEST_CASE("rectangle probability argument errors") {
    const auto omega = equicorrelated(2, 0.1);
    CHECK_THROWS_AS(symmetric_rectangle_probability(omega, -1.0, 1e-4, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(symmetric_rectangle_probability(omega, 2.0, 0.0, 0),
                    std::invalid_argument);
}

TEST_CASE("near-singular correlations from duplicate variables still work") {
    CorrelationMatrix omega({{1.0, 1.0}, {1.0, 1.0}});
    const auto est = symmetric_rectangle_probability(omega, 1.959964, 1e-5, 4);
    // duplicate variable adds no constraint: same as univariate
    CHECK(est.value == doctest::Approx(0.95).epsilon(5e-4));
}
