#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "stopsum/errors.hpp"
#include "stopsum/normal_math.hpp"

using namespace stopsum;

TEST_CASE("std_normal_cdf: reference values") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std::fabs(std_normal_cdf(40.0) - 1.0) <= 1e-15);
  CHECK(std_normal_cdf(-40.0) >= 0.0);
  // Reference from a 40-digit evaluation: 0.974999999999999986...
  CHECK(std::fabs(std_normal_cdf(1.959963984540054) - 0.975) <= 1e-14);
  CHECK(std::fabs(std_normal_cdf(1.0) - 0.8413447460685429) <= 1e-15);
}

TEST_CASE("std_normal_cdf: agrees with the series/continued-fraction oracle") {
  double worst = 0.0;
  for (double x = -12.0; x <= 12.0; x += 0.00731) {
    worst = std::max(worst, std::fabs(std_normal_cdf(x) - oracle::phi(x)));
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("std_normal_cdf: symmetry and monotonicity") {
  for (double x = -8.0; x <= 8.0; x += 0.001) {
    REQUIRE(std::fabs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-14);
  }
  double previous = std_normal_cdf(-8.0);
  bool monotone = true;
  for (long i = 1; i <= 16'000'000; ++i) {
    const double current = std_normal_cdf(-8.0 + 1e-6 * static_cast<double>(i));
    monotone = monotone && current >= previous;
    previous = current;
  }
  CHECK(monotone);
}

TEST_CASE("std_normal_cdf and gaussian_cf reject non-finite input") {
  CHECK_THROWS_AS(std_normal_cdf(std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_THROWS_AS(std_normal_cdf(std::numeric_limits<double>::infinity()), DomainError);
  CHECK_THROWS_AS(gaussian_cf(std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("gaussian_cf") {
  CHECK(gaussian_cf(0.0) == 1.0);
  CHECK(std::fabs(gaussian_cf(1.0) - 0.6065306597126334) <= 1e-16);
  CHECK(gaussian_cf(-2.0) == gaussian_cf(2.0));
}

TEST_CASE("dkw_halfwidth") {
  const double e2 = std::numbers::e * std::numbers::e;
  CHECK(std::fabs(dkw_halfwidth(8, 2.0 / e2) - 0.35355339059327373) <= 1e-15);
  CHECK(std::fabs(dkw_halfwidth(1'000'000, 0.05) - 0.0013581015157406195) <= 1e-17);
  CHECK_THROWS_AS(dkw_halfwidth(10, 2.0), DomainError);
  CHECK_THROWS_AS(dkw_halfwidth(10, 0.0), DomainError);
  CHECK_THROWS_AS(dkw_halfwidth(0, 0.5), DomainError);
}

TEST_CASE("kolmogorov_distance: small samples") {
  const DistanceResult one = kolmogorov_distance(EmpiricalCdf({0.0}));
  CHECK(one.d_sup == 0.5);
  CHECK(one.argmax_x == 0.0);

  const DistanceResult two = kolmogorov_distance(EmpiricalCdf({1.0, -1.0}));
  CHECK(std::fabs(two.d_sup - 0.3413447460685429) <= 1e-15);

  CHECK_THROWS_AS(kolmogorov_distance(EmpiricalCdf(std::vector<double>{})), DomainError);
  CHECK_THROWS_AS(EmpiricalCdf({0.0, std::numeric_limits<double>::quiet_NaN()}), DomainError);
}

TEST_CASE("kolmogorov_distance: quantile sample sits within half a step") {
  std::vector<double> q;
  for (int i = 1; i <= 1000; ++i) q.push_back(oracle::phi_inverse((i - 0.5) / 1000.0));
  const DistanceResult d = kolmogorov_distance(EmpiricalCdf(q));
  CHECK(d.d_sup <= 0.0005 + 1e-12);
  CHECK(d.dkw_halfwidth == dkw_halfwidth(1000, kDefaultDelta));
  CHECK(d.count == 1000);
}

TEST_CASE("kolmogorov_distance: duplication invariance and brute-force agreement") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal(0.3, 1.2);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> s(1 + trial * 7);
    for (double& v : s) v = normal(gen);
    if (trial % 3 == 0) s.push_back(s.front());  // a tie

    const DistanceResult d = kolmogorov_distance(EmpiricalCdf(s));
    CHECK(d.d_sup >= 0.0);
    CHECK(d.d_sup <= 1.0);
    CHECK(std::fabs(d.d_sup - oracle::brute_force_sup(s, [](double x) { return oracle::phi(x); })) <= 1e-12);

    std::vector<double> doubled = s;
    doubled.insert(doubled.end(), s.begin(), s.end());
    CHECK(std::fabs(kolmogorov_distance(EmpiricalCdf(doubled)).d_sup - d.d_sup) <= 1e-15);
  }
}

TEST_CASE("kolmogorov_distance: custom CDF") {
  auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  const DistanceResult d = kolmogorov_distance(EmpiricalCdf({0.25, 0.75}), uniform);
  CHECK(d.d_sup == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("EmpiricalCdf evaluation and quantiles") {
  const EmpiricalCdf f({3.0, 1.0, 2.0, 2.0});
  CHECK(f(0.0) == 0.0);
  CHECK(f(2.0) == 0.75);
  CHECK(f(3.0) == 1.0);
  CHECK(f.quantile(0.25) == 1.0);
  CHECK(f.quantile(0.5) == 2.0);
  CHECK(f.quantile(1.0) == 3.0);
  CHECK_THROWS_AS(f.quantile(0.0), DomainError);
}
