#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fblab/epiperimetric.hpp"
#include "fblab/error.hpp"

using namespace fblab;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> half_samples(int n, const std::function<double(double)>& f) {
  std::vector<double> s(n + 1);
  for (int k = 0; k <= n; ++k) s[k] = f(k * pi / n);
  s.front() = 0.0;
  s.back() = 0.0;
  return s;
}

SphericalTrace random_trace(std::mt19937_64& rng, Setting setting, int modes, int d = 2) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(modes + 1), b;
  for (int j = 0; j <= modes; ++j) a[j] = g(rng) / (1.0 + j);
  if (setting == Setting::full) {
    b.resize(modes + 1);
    for (int j = 1; j <= modes; ++j) b[j] = g(rng) / (1.0 + j);
  }
  return make_trace(setting, a, b, d);
}

// Partition of the arc into n disjoint random arcs with random gaps and shapes.
SegregatedTrace random_segregated(std::mt19937_64& rng, Setting setting, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double L = setting == Setting::half ? pi : 2.0 * pi;
  std::vector<double> cuts{0.0};
  double total = 0.0;
  std::vector<double> w(n);
  for (auto& x : w) total += (x = 0.2 + u(rng));
  for (int i = 0; i < n; ++i) cuts.push_back(cuts.back() + L * w[i] / total);
  SegregatedTrace z;
  z.setting = setting;
  for (int i = 0; i < n; ++i) {
    const double gap = 0.15 * u(rng) * (cuts[i + 1] - cuts[i]);
    std::vector<double> beta(3);
    for (auto& b : beta) b = 0.6 * (u(rng) - 0.5);
    z.components.push_back(arc_profile(cuts[i] + gap, cuts[i + 1], 0.3 + u(rng), beta));
  }
  return z;
}

}  // namespace

TEST_CASE("fourier decomposition examples") {
  const auto f1 = fourier_decompose(half_samples(512, [](double t) { return std::sqrt(2.0 / pi) * std::sin(t); }),
                                    Setting::half);
  CHECK(f1.a[1] == doctest::Approx(1.0).epsilon(1e-12));
  for (int j = 2; j <= 64; ++j) CHECK(std::abs(f1.a[j]) < 1e-12);

  const auto f2 =
      fourier_decompose(half_samples(512, [](double t) { return std::sin(t) + 0.3 * std::sin(3 * t); }), Setting::half);
  CHECK(f2.a[1] == doctest::Approx(std::sqrt(pi / 2)).epsilon(1e-12));
  CHECK(f2.a[3] == doctest::Approx(0.3 * std::sqrt(pi / 2)).epsilon(1e-12));
  CHECK(std::abs(f2.a[2]) < 1e-12);
  CHECK(f2.tail < 1e-8);

  const auto f0 = fourier_decompose(std::vector<double>(300, 0.0), Setting::half);
  CHECK(f0.l2() == 0.0);

  auto bad = half_samples(512, [](double t) { return std::sin(t); });
  bad.front() = 1e-3;
  CHECK_THROWS_AS(fourier_decompose(bad, Setting::half), Error);
  CHECK_THROWS_AS(fourier_decompose(std::vector<double>(100, 0.0), Setting::half), Error);
}

TEST_CASE("fourier decomposition satisfies Parseval on band-limited traces") {
  std::mt19937_64 rng(11);
  for (Setting s : {Setting::half, Setting::full}) {
    for (int rep = 0; rep < 10; ++rep) {
      const auto f = random_trace(rng, s, 16);
      const int n = 512;
      std::vector<double> samples;
      if (s == Setting::half) {
        samples = half_samples(n, [&](double t) { return f.value(t); });
      } else {
        for (int k = 0; k < n; ++k) samples.push_back(f.value(2 * pi * k / n));
      }
      const auto g = fourier_decompose(samples, s);
      double norm = 0.0;
      for (std::size_t k = 0; k < samples.size(); ++k) norm += samples[k] * samples[k];
      norm *= (s == Setting::half ? pi : 2 * pi) / n;
      CHECK(g.l2() == doctest::Approx(norm).epsilon(1e-10));
      CHECK(g.l2() == doctest::Approx(f.l2()).epsilon(1e-10));
      for (int j = 0; j <= 16; ++j) CHECK(std::abs(g.mass(j) - f.mass(j)) < 1e-10);
    }
  }
}

TEST_CASE("coefficient-space Weiss energies") {
  auto single = [](int j) {
    std::vector<double> a(j + 1, 0.0);
    a[j] = 1.0;
    return make_trace(Setting::half, a);
  };
  CHECK(weiss_homogeneous(2, 1.0, single(2)) == doctest::Approx(1.5));
  CHECK(weiss_homogeneous(2, 2.0, single(2)) == doctest::Approx(0.0));
  CHECK(weiss_homogeneous(3, 2.0, single(3)) == doctest::Approx(1.2));
  CHECK(weiss_harmonic_extension(2, 1.0, single(2)) == doctest::Approx(1.0));
  CHECK(weiss_harmonic_extension(2, 1.0, single(1)) == doctest::Approx(0.0));
  CHECK(weiss_harmonic_extension(3, 2.0, single(3)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(weiss_homogeneous(1, 0.0, single(2)), Error);
}

TEST_CASE("harmonic gain examples") {
  const auto f = make_trace(Setting::half, {0.0, 0.0, 1.0});
  const auto g = gain_harmonic_check(2, 1.0, f, 1.0 / 3.0);
  CHECK(std::abs(g.lhs) < 1e-14);
  CHECK(std::abs(g.rhs) < 1e-14);
  CHECK(g.eps1 == doctest::Approx(1.0 / 3.0));
  const auto one = make_trace(Setting::half, {0.0, 1.0});
  for (double eps : {0.0, 0.2, 0.9}) CHECK(gain_harmonic_check(2, 1.0, one, eps).lhs == doctest::Approx(0.0));
}

TEST_CASE("harmonic gain identity and sign on random coefficients") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dd(2, 6);
  for (int rep = 0; rep < 200; ++rep) {
    const int d = dd(rng);
    const double gamma = 1.0 + u(rng);
    const auto f = random_trace(rng, Setting::half, 15, d);
    const double eps = u(rng);
    const auto g = gain_harmonic_check(d, gamma, f, eps);
    CHECK(std::abs(g.lhs - g.rhs) <= 1e-12 * (1.0 + std::abs(g.lhs)));
    const auto at = gain_harmonic_check(d, gamma, f, g.eps1);
    CHECK(at.lhs <= 1e-13);
  }
}

TEST_CASE("harmonic gain is sharp on the degree-2 mode below gamma 2") {
  const auto f = make_trace(Setting::half, {0.0, 0.0, 1.0});
  for (double gamma : {1.5, 1.9, 1.99}) {
    const double sharp = (2.0 - gamma) / (2.0 + gamma);
    CHECK(std::abs(gain_harmonic_check(2, gamma, f, sharp).lhs) < 1e-14);
    CHECK(gain_harmonic_check(2, gamma, f, 1.01 * sharp).lhs > 0.0);
    CHECK(eps1(2, gamma) <= sharp);
  }
}

TEST_CASE("Weiss identities match polar quadrature") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const Setting s = rep % 2 ? Setting::full : Setting::half;
    const double gamma = rep % 4 < 2 ? 1.0 : 2.0;
    auto f = random_trace(rng, s, 8);
    if (s == Setting::full) f.a[0] = 0.0;
    const double z = weiss_quadrature(homogeneous_field(f, gamma), gamma, s);
    const double h = weiss_quadrature(harmonic_field(f), gamma, s);
    CHECK(z == doctest::Approx(weiss_homogeneous(2, gamma, f)).epsilon(1e-6));
    CHECK(h == doctest::Approx(weiss_harmonic_extension(2, gamma, f)).epsilon(1e-6));
  }
}

TEST_CASE("slicing decomposition") {
  const auto f = make_trace(Setting::half, {0.0, 0.4, 1.0, -0.3});
  const auto z = slicing_decomposition(homogeneous_field(f, 1.5), 1.5, Setting::half);
  CHECK(std::abs(z.radial) < 1e-14);
  CHECK(z.total == doctest::Approx(z.direct).epsilon(1e-10));

  const auto sin2 = make_trace(Setting::half, {0.0, 0.0, std::sqrt(pi / 2)});
  const auto h = slicing_decomposition(harmonic_field(sin2), 1.0, Setting::half);
  CHECK(h.total == doctest::Approx(weiss_harmonic_extension(2, 1.0, sin2)).epsilon(1e-6));
  CHECK(h.total == doctest::Approx(pi / 2).epsilon(1e-6));

  PolarField zero;
  zero.value = zero.dr = zero.dt = [](double, double) { return 0.0; };
  const auto o = slicing_decomposition(zero, 1.0, Setting::half);
  CHECK(o.angular == 0.0);
  CHECK(o.radial == 0.0);
  CHECK(o.total == 0.0);

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = random_trace(rng, Setting::half, 10);
    const auto t = truncated_field(g, 0.2 + 0.05 * rep, 2.3);
    const auto sl = slicing_decomposition(t, 1.0 + 0.1 * rep, Setting::half);
    CHECK(sl.total == doctest::Approx(sl.direct).epsilon(1e-6));
  }
}

TEST_CASE("rescaling identity") {
  const auto f = make_trace(Setting::half, {0.0, 0.0, std::sqrt(pi / 2)});
  const auto z = rescaling_identity_check(homogeneous_field(f, 1.0), f, 1.0, 0.5, Setting::half);
  CHECK(std::abs(z.lhs) < 1e-10);
  CHECK(std::abs(z.rhs) < 1e-10);

  const auto h = rescaling_identity_check(harmonic_field(f), f, 1.0, 0.5, Setting::half);
  CHECK(h.lhs == doctest::Approx(h.rhs).epsilon(1e-6));
  CHECK(h.lhs < -1e-3);

  const double wz = weiss_quadrature(homogeneous_field(f, 1.0), 1.0, Setting::half);
  const double wh = weiss_quadrature(harmonic_field(f), 1.0, Setting::half);
  const auto one = rescaling_identity_check(harmonic_field(f), f, 1.0, 1.0, Setting::half);
  CHECK(one.lhs == doctest::Approx(wh - wz).epsilon(1e-10));
  CHECK(one.rhs == doctest::Approx(wh - wz).epsilon(1e-10));

  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = random_trace(rng, rep % 2 ? Setting::full : Setting::half, 8);
    auto gg = g;
    if (!gg.a.empty()) gg.a[0] = 0.0;
    const double gamma = 1.0 + 0.1 * rep;
    const auto c = rescaling_identity_check(harmonic_field(gg), gg, gamma, 0.3 + 0.05 * rep, gg.setting);
    CHECK(c.lhs == doctest::Approx(c.rhs).epsilon(1e-6));
  }

  // |x|^gamma in place of rho^gamma inside the small ball breaks the identity.
  const auto lit = rescaled_field_literal(harmonic_field(f), 1.0, 0.5);
  const double wl = weiss_quadrature(lit, 1.0, Setting::half);
  CHECK(std::abs((wl - wz) - h.rhs) > 1e-2);
}

TEST_CASE("high-mode parameters follow the closed form") {
  for (int d : {2, 3, 5}) {
    for (double gamma : {1.0, 1.37, 2.0}) {
      for (double ell : {0.1, 1.0, 32.0, 1e6}) {
        const auto p = high_mode_parameters(d, gamma, ell);
        const double K = 2.0 + (d + 2 * gamma - 2) * (1 + gamma * gamma) / ell;
        const double root = 1.0 / (std::pow(2.0, 2 * gamma + 1) * K * (d + 2 * gamma - 1));
        const double a = std::min(0.5, root * root);
        CHECK(p.a == doctest::Approx(a).epsilon(1e-12));
        CHECK(p.rho == doctest::Approx(std::pow(a, 1.5)).epsilon(1e-12));
        CHECK(p.eps2 == doctest::Approx(a / (d + 2 * gamma - 1)).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(high_mode_parameters(2, 1.0, 0.0), Error);
}

TEST_CASE("truncation radial integrals") {
  for (int d : {2, 3, 4, 6}) {
    for (double rho : {0.0, 0.1, 0.45}) {
      for (double tau : {1.0, 1.7, 3.2}) {
        const auto [i1, i2] = truncation_radial_integrals(d, rho, tau);
        auto g2 = [&](double r) { return r <= rho ? 0.0 : std::pow((r - rho) / (1 - rho), 2 * tau); };
        auto dg2 = [&](double r) {
          return r <= rho ? 0.0 : tau * tau * std::pow((r - rho) / (1 - rho), 2 * tau - 2) / ((1 - rho) * (1 - rho));
        };
        double n1 = 0.0, n2 = 0.0;
        const int m = 200000;
        for (int k = 0; k < m; ++k) {
          const double r = rho + (k + 0.5) * (1 - rho) / m;
          n1 += dg2(r) * std::pow(r, d - 1);
          n2 += g2(r) * std::pow(r, d - 3);
        }
        n1 *= (1 - rho) / m;
        n2 *= (1 - rho) / m;
        CHECK(i1 == doctest::Approx(n1).epsilon(1e-6));
        if (rho > 0.0 || d > 2) CHECK(i2 == doctest::Approx(n2).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("truncation competitor") {
  std::vector<double> a(7, 0.0);
  a[6] = 1.0;
  const auto f = make_trace(Setting::half, a);
  const auto t = truncation_competitor(f, 2, 2.0, 32.0);
  CHECK(t.weiss_homogeneous == doctest::Approx(8.0));
  CHECK(t.difference <= -t.params.eps2 * t.weiss_homogeneous);
  CHECK(t.weiss_truncated <= (1 - t.params.eps2) * t.weiss_homogeneous);
  CHECK(t.params.a > 0.0);

  auto a2 = a;
  a2[6] = 2.0;
  const auto t2 = truncation_competitor(make_trace(Setting::half, a2), 2, 2.0, 32.0);
  CHECK(t2.params.eps2 == t.params.eps2);
  CHECK(t2.weiss_homogeneous == doctest::Approx(4 * t.weiss_homogeneous));
  CHECK(t2.weiss_truncated == doctest::Approx(4 * t.weiss_truncated));

  CHECK_THROWS_AS(truncation_competitor(make_trace(Setting::half, {0.0, 0.0, 1.0}), 2, 2.0, 0.1), Error);
  CHECK_THROWS_AS(truncation_competitor(make_trace(Setting::half, {0.0, 1.0}), 2, 1.0, 0.1), Error);
  CHECK_THROWS_AS(truncation_competitor(make_trace(Setting::half, {0.0, 0.0, 1.0, 1.0}), 2, 2.0, 40.0), Error);
}

TEST_CASE("truncated energy matches polar quadrature") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 8; ++rep) {
    const auto f = random_trace(rng, Setting::half, 10);
    const double gamma = 1.0 + rep / 7.0, rho = 0.1 + 0.05 * rep, tau = gamma + 0.3;
    const double direct = weiss_quadrature(truncated_field(f, rho, tau), gamma, Setting::half);
    const double semi =
        weiss_homogeneous(2, gamma, f) + truncation_gain(2, gamma, rho, tau, f.l2(), f.dirichlet());
    CHECK(direct == doctest::Approx(semi).epsilon(1e-6));
  }
}

TEST_CASE("trace components") {
  const auto c = arc_profile(0.0, pi, 1.0, {});
  CHECK(c.l2() == doctest::Approx(pi / 2).epsilon(1e-12));
  CHECK(c.dirichlet() == doctest::Approx(pi / 2).epsilon(1e-12));
  const auto s = c.coefficients(Setting::half, 64);
  CHECK(s.a[1] == doctest::Approx(std::sqrt(pi / 2)).epsilon(1e-12));
  CHECK(s.tail < 1e-12);
  const auto k = arc_profile(0.3, 1.9, 0.7, {0.2, -0.1});
  const double h = 1e-6;
  for (double t : {0.5, 1.0, 1.7})
    CHECK(k.derivative(t) == doctest::Approx((k.value(t + h) - k.value(t - h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("competitor for eigenmode traces is the identity") {
  SegregatedTrace one;
  one.setting = Setting::half;
  one.components.push_back(arc_profile(0.0, pi, 1.0, {}));
  const auto c = build_epi_competitor(one, 1.0);
  CHECK(c.identity);
  CHECK(std::abs(c.weiss_z) < 1e-12);
  CHECK(c.satisfies(c.eps_certified));

  SegregatedTrace pair;
  pair.components = {arc_profile(0.0, pi / 2, 1.0, {}), arc_profile(pi / 2, pi, 1.0, {})};
  const auto p = build_epi_competitor(pair, 2.0);
  CHECK(std::abs(p.weiss_z) < 1e-12);
  CHECK(p.difference <= 1e-12);
}

TEST_CASE("competitor for a low-mode pair at gamma 2") {
  SegregatedTrace z;
  z.components = {arc_profile(0.0, 1.55, 1.0, {}), arc_profile(1.55, pi, 0.5, {})};
  const auto c = build_epi_competitor(z, 2.0);
  CHECK(c.low_components.size() == 2);
  CHECK(c.weiss_z > 0.0);
  CHECK(c.harmonic_used);
  CHECK(c.difference < 0.0);
  CHECK(c.satisfies(c.eps_certified));
  CHECK(c.trace_mismatch < 1e-12);
  CHECK(c.first_mode_ratio > 0.0);
  // The rescaled harmonic gain scales with rho^(d + 2 gamma - 2), so rho^d is too optimistic at gamma 2.
  CHECK(c.eps_printed > c.eps_certified);
  CHECK_FALSE(c.satisfies(c.eps_printed));
}

TEST_CASE("competitor truncates a short third component") {
  SegregatedTrace z;
  z.components = {arc_profile(0.0, 1.6, 1.0, {0.1}), arc_profile(1.6, 2.0 * pi / 3 + 0.6, 1.0, {}),
                  arc_profile(2.0 * pi / 3 + 0.6, pi, 0.8, {-0.2})};
  for (double gamma : {1.0, 2.0}) {
    const auto c = build_epi_competitor(z, gamma);
    CHECK(std::find(c.low_components.begin(), c.low_components.end(), 2) == c.low_components.end());
    CHECK(c.difference < 0.0);
    CHECK(c.satisfies(c.eps_certified));
    CHECK(c.trace_mismatch < 1e-12);
  }
}

TEST_CASE("epiperimetric inequality on random segregated traces") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(1, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Case {
    Setting s;
    double gamma;
  };
  for (const Case cs : {Case{Setting::half, 1.0}, Case{Setting::half, 2.0}, Case{Setting::full, 1.0}}) {
    int improved = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const auto z = random_segregated(rng, cs.s, count(rng));
      REQUIRE(z.max_overlap() == 0.0);
      const auto c = build_epi_competitor(z, cs.gamma);
      CHECK(c.low_components.size() <= 2);
      CHECK(c.satisfies(c.eps_certified));
      CHECK(c.trace_mismatch < 1e-12);
      if (c.weiss_z <= 0.0) CHECK(c.identity);
      if (c.weiss_z > 0.0) {
        CHECK(c.difference < 0.0);
        ++improved;
      }
      for (int k = 0; k < 50; ++k) {
        const double r = u(rng), t = u(rng) * (cs.s == Setting::half ? pi : 2 * pi);
        for (std::size_t i = 0; i < c.components.size(); ++i)
          for (std::size_t j = i + 1; j < c.components.size(); ++j)
            CHECK(c.components[i].value(r, t) * c.components[j].value(r, t) == 0.0);
      }
    }
    CHECK(improved > 10);
  }
}

TEST_CASE("competitor rejects invalid homogeneity") {
  SegregatedTrace z;
  z.components.push_back(arc_profile(0.0, 1.0, 1.0, {}));
  CHECK_THROWS_AS(build_epi_competitor(z, 2.5), Error);
  z.setting = Setting::full;
  CHECK_THROWS_AS(build_epi_competitor(z, 2.0), Error);
}

TEST_CASE("rearrangement constant") {
  CHECK(compute_qd_squared() == doctest::Approx(qd_squared_closed_form()).epsilon(1e-4));
  CHECK(qd_squared_closed_form() == doctest::Approx(0.9423).epsilon(1e-4));
  CHECK(compute_qd_squared(1.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(compute_qd_squared(1e-6) < 1e-5);
}

TEST_CASE("delta_d") {
  CHECK(delta_d(0.0, 2) == 1.0);
  CHECK(delta_d(std::sqrt(qd_squared_closed_form()), 2) == doctest::Approx(0.0708).epsilon(1e-3 / 0.0708));
  CHECK(delta_d(1.0 - 1e-9, 2) < 1e-8);
  CHECK(delta_d(0.999, 3) > 0.0);
  CHECK_THROWS_AS(delta_d(1.0, 2), Error);
  CHECK_THROWS_AS(delta_d(-0.1, 2), Error);
}

TEST_CASE("certified constants") {
  const auto k = certified_constants(2);
  CHECK(k.ell0 == doctest::Approx(0.5 * (1 - k.q_squared) * 5));
  CHECK(k.eps_bd > 0.0);
  CHECK(k.eps_int > 0.0);
  CHECK(k.gamma_grid.size() == 21);
  CHECK(k.eps_bd <= k.eps_bd_printed);
  CHECK(k.eps_int == doctest::Approx(std::min(eps1(2, 1.0) * std::pow(high_mode_parameters(2, 1.0, k.ell0).rho, 2),
                                              high_mode_parameters(2, 1.0, k.ell0).eps2)));
  const auto again = certified_constants(2);
  CHECK(again.eps_bd == k.eps_bd);
  CHECK(again.eps_int == k.eps_int);
  for (double e : k.eps_on_grid) CHECK(e >= k.eps_bd);
  CHECK_THROWS_AS(certified_constants(3), Error);
}
