#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fblab/error.hpp"
#include "fblab/moduli.hpp"

using namespace fblab;

namespace {

// Independent oracle: midpoint rule in s = -log t over a long finite window.
double midpoint_dini(const std::function<double(double)>& sigma_of_r, double r, double window = 60.0, int n = 600000) {
  const double s0 = -std::log(r);
  const double ds = window / n;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += sigma_of_r(std::exp(-(s0 + (k + 0.5) * ds)));
  return acc * ds;
}

}  // namespace

TEST_CASE("dini integrals of power moduli") {
  CHECK(dini_integral(Modulus::power(1.0, 1.0), 0.5, 1).value == doctest::Approx(0.5).epsilon(1e-12));
  const auto sq = Modulus::power(1.0, 0.5);
  const double oracle = midpoint_dini([](double t) { return std::sqrt(t); }, 0.25);
  CHECK(oracle == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(dini_integral(sq, 0.25, 1).value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(dini_integral(Modulus::power(1.0, 1.0), 0.5, 2).value == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(dini_integral(sq, 0.25, 0).value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("depth zero carries the logarithmic weight") {
  const auto id = Modulus::power(1.0, 1.0);
  // int_0^r |log t| dt = r (1 - log r)
  CHECK(dini_integral(id, 0.5, 0, 1.0).value == doctest::Approx(0.5 * (1.0 + std::log(2.0))).epsilon(1e-10));
  CHECK(dini_integral(id, 0.5, 0, 0.0).value == doctest::Approx(0.5).epsilon(1e-10));
  CHECK_THROWS_AS(dini_integral(id, 0.5, 2, 1.0), Error);
  CHECK_THROWS_AS(dini_integral(id, 2.0, 1), Error);
}

TEST_CASE("log-power moduli and divergence flags") {
  const auto lp2 = Modulus::log_power(1.0, 2.0, 0.5);
  CHECK(iterated_dini(lp2, 0.5, 1).value == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-9));
  CHECK_FALSE(iterated_dini(lp2, 0.5, 1).divergent);
  CHECK(iterated_dini(lp2, 0.5, 2).divergent);
  CHECK(iterated_dini(Modulus::log_power(1.0, 1.0, 0.5), 0.5, 1).divergent);
  // s^-4 tail: D^2(r) = |log r|^-2 / 6
  const auto lp4 = Modulus::log_power(1.0, 4.0, 0.5);
  const double s = std::log(4.0);
  CHECK(iterated_dini(lp4, 0.25, 2).value == doctest::Approx(1.0 / (6.0 * s * s)).epsilon(1e-8));
}

TEST_CASE("alpha-Dini equivalence examples") {
  auto a = check_alpha_dini_equivalence(Modulus::power(1.0, 1.0), 2, 0.0, 0.5);
  CHECK(a.first);
  CHECK(a.second);
  auto b = check_alpha_dini_equivalence(Modulus::log_power(1.0, 4.0, 0.5), 2, 0.0, 0.5);
  CHECK(b.first);
  CHECK(b.second);
  auto c = check_alpha_dini_equivalence(Modulus::log_power(1.0, 2.0, 0.5), 2, 0.0, 0.5);
  CHECK_FALSE(c.first);
  CHECK_FALSE(c.second);
}

TEST_CASE("property: booleans agree on random log-power moduli") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> beta(1.2, 6.0);
  std::uniform_int_distribution<int> depth(1, 3);
  for (int trial = 0; trial < 12; ++trial) {
    const double b = beta(rng);
    const int n = depth(rng);
    // Skip the borderline band where a finite cap cannot decide.
    if (std::abs(b - (n + 1)) < 0.3) continue;
    const auto res = check_alpha_dini_equivalence(Modulus::log_power(1.0, b, 0.5), n, 0.0, 0.5);
    CHECK(res.first == res.second);
    CHECK(res.first == (b > n + 1));
  }
}

TEST_CASE("property: power moduli have closed-form iterated integrals") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> expo(0.1, 2.0), rad(0.01, 1.0), coef(0.1, 3.0);
  for (int trial = 0; trial < 40; ++trial) {
    const double c = coef(rng), a = expo(rng), r = rad(rng);
    const int j = 1 + trial % 3;
    const double expected = c * std::pow(r, a) / std::pow(a, j);
    CHECK(iterated_dini(Modulus::power(c, a), r, j).value == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("smoothing construction") {
  const auto h = smooth_modulus(Modulus::power(1.0, 1.0));
  for (double r : {1e-6, 1e-3, 0.1, 0.7}) CHECK(h(r) == doctest::Approx(r).epsilon(1e-9));

  const auto h_sq = smooth_modulus(Modulus::power(1.0, 2.0));
  for (double r : {1e-4, 0.01, 0.3}) CHECK(h_sq(r) == doctest::Approx(r).epsilon(1e-9));

  const auto zero = smooth_modulus(Modulus::power(0.0, 1.0));
  CHECK(zero(0.3) == 0.0);

  // sqrt input: each averaging pass multiplies by 4(1 - 2^-1/2)
  const double factor = 4.0 * (1.0 - 1.0 / std::sqrt(2.0));
  const auto h_root = smooth_modulus(Modulus::power(1.0, 0.5));
  for (double r : {1e-5, 0.02, 0.4}) CHECK(h_root(r) == doctest::Approx(factor * factor * std::sqrt(r)).epsilon(1e-8));
}

TEST_CASE("property: smoothed random tables dominate and satisfy derivative bounds") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> step(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<double> rs, vs;
    double v = 1e-4;
    for (int k = 0; k < 12; ++k) {
      rs.push_back(std::pow(10.0, -4.0 + 4.0 * k / 11.0));
      v *= 1.0 + 4.0 * step(rng);
      vs.push_back(v);
    }
    const auto f = Modulus::tabulated(rs, vs);
    CHECK_FALSE(f.regular());
    const auto h = smooth_modulus(f);
    const auto rep = check_regularity(h, 1e-4, 0.9, 1000);
    CHECK(rep.max_first <= 2.0 + 1e-7);
    CHECK(rep.max_second <= 4.0 + 1e-6);
    CHECK(rep.max_ratio_slope <= 1e-7);
    for (int k = 0; k < 50; ++k) {
      const double r = std::pow(10.0, -4.0 + 4.0 * k / 50.0) * 0.99;
      CHECK(h(r) >= f(r) * (1.0 - 1e-9));
    }
  }
}

TEST_CASE("alpha of sigma") {
  CHECK(alpha_of_sigma(Modulus::power(1.0, 1.0), 0.3) == doctest::Approx(1.8));
  CHECK(alpha_of_sigma(Modulus::power(1.0, 0.5), 0.25) == doctest::Approx(2.25));
  const auto lin = Modulus::power(2.5, 1.0);
  CHECK(alpha_of_sigma(lin, 1e-9) / lin(1e-9) == doctest::Approx(6.0));
  CHECK_THROWS_AS(alpha_of_sigma(Modulus::tabulated({0.1, 1.0}, {0.1, 0.5}), 0.3), Error);
  const auto rep = check_regularity(smooth_modulus(Modulus::power(1.0, 0.3)), 1e-5, 0.9);
  CHECK(rep.ok());
}

TEST_CASE("upsilon and theta") {
  const auto s0 = Modulus::power(1.0, 1.0);
  const auto [u, t] = upsilon_theta(s0, 0.25);
  CHECK(u == doctest::Approx(std::pow(0.25, 2.5)).epsilon(1e-10));
  CHECK(t == doctest::Approx(std::pow(0.25, 0.2)).epsilon(1e-9));
  CHECK(theta(s0, 0.03125) == doctest::Approx(0.5).epsilon(1e-9));
  const auto z = upsilon_theta(s0, 0.0);
  CHECK(z.first == 0.0);
  CHECK(z.second == 0.0);
  CHECK_THROWS_AS(theta(s0, 2.0), RangeError);
}

TEST_CASE("relations between sigma and sigma0") {
  const auto sigma = Modulus::power(1.0, 1.0);
  const auto sigma0 = Modulus::power(1.0, 0.5);
  const double R = 0.25, m = 0.5;
  const auto rel = check_relations(sigma, sigma0, R, m);
  CHECK(rel.nondegeneracy == doctest::Approx(1.0));
  CHECK(rel.max_sigma_over_dini <= 1.0 + 1e-9);
  CHECK(rel.c_sigma0 == doctest::Approx(0.5 * std::sqrt(2.0 * R)).epsilon(1e-9));
  CHECK(rel.max_sigma_over_c_dini0 <= 1.0 + 1e-9);
  CHECK(rel.min_dini0_over_power >= 1.0 - 1e-9);

  const auto rep = dini_report(sigma, sigma0, R, m);
  CHECK(rep.admissible);
  CHECK(rep.double_dini == doctest::Approx(2.0 * std::sqrt(2.0 * R)).epsilon(1e-8));
  CHECK(rep.dini(0.1).value == doctest::Approx(0.1).epsilon(1e-10));
  // sigma0 = r grows faster than r^m for m < 1, and sigma = sigma0 = r has a divergent double integral.
  const auto bad = dini_report(sigma, sigma, R, 1e-3);
  CHECK_FALSE(bad.power_condition);
  CHECK(bad.double_divergent);
  CHECK_FALSE(bad.admissible);
}
