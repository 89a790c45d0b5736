#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fblab/blowup.hpp"
#include "fblab/error.hpp"

using namespace fblab;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double j11 = 3.831705970207512;

Center flat_center() { return Center::boundary(BoundaryChart::flat(Modulus::power(0.0, 1.0, 1.0), 0.5)); }

// the flat chart at the origin has outward normal (0, -1)
AnalyticField wedge(double a, int N, int j) {
  std::vector<AnalyticComponent> parts;
  for (int i = 0; i < N; ++i) {
    AnalyticComponent c;
    c.lambda = 1.0;
    if (i == j) {
      c.value = [a](Vec2 x) { return a * std::max(0.0, x.y); };
      c.gradient = [a](Vec2 x) { return x.y > 0 ? Vec2{0.0, a} : Vec2{}; };
    } else {
      c.value = [](Vec2) { return 0.0; };
      c.gradient = [](Vec2) { return Vec2{}; };
    }
    parts.push_back(c);
  }
  return AnalyticField(parts);
}

AnalyticField from_values(std::vector<std::function<double(Vec2)>> values) {
  std::vector<AnalyticComponent> parts;
  for (auto& v : values) parts.push_back({v, [](Vec2) { return Vec2{}; }, 1.0});
  return AnalyticField(parts);
}

// first antisymmetric Dirichlet mode of the unit disk split by sign, each half of unit L2 norm
AnalyticField disk_mode_one(double rotation) {
  const double c = 2.0 / (std::sqrt(pi) * std::abs(std::cyl_bessel_j(0, j11)));
  std::vector<std::function<double(Vec2)>> values;
  for (int s = 0; s < 2; ++s)
    values.push_back([=](Vec2 x) {
      const double r = norm(x);
      if (r >= 1.0 || r == 0.0) return 0.0;
      const double v = c * std::cyl_bessel_j(1, j11 * r) * std::sin(std::atan2(x.y, x.x) - rotation);
      return std::max(0.0, s == 0 ? v : -v);
    });
  return from_values(values);
}

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> r;
  for (int k = 0; k < n; ++k) r.push_back(lo * std::pow(hi / lo, k / (n - 1.0)));
  return r;
}

}  // namespace

TEST_CASE("rescaling a homogeneous field does not depend on the radius") {
  const auto u = homogeneous_sectors({0.2, 0.1}, 0.3, 1.5, 3);
  const Center c = Center::interior({0.2, 0.1});
  const auto a = rescale(u, c, 0.05, 1.5);
  const auto b = rescale(u, c, 0.4, 1.5);
  REQUIRE(a.points.size() == b.points.size());
  for (int i = 0; i < 3; ++i)
    for (std::size_t m = 0; m < a.points.size(); m += 7) CHECK(a.values[i][m] == doctest::Approx(b.values[i][m]).epsilon(1e-10));
  CHECK(trace_gap(a, b) <= 1e-20);
}

TEST_CASE("rescaling is linear") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.1, 5.0);
  const auto u = homogeneous_sectors({0, 0}, 0.0, 2.0, 2);
  for (int t = 0; t < 5; ++t) {
    const double s = U(rng), r = 0.05 * U(rng);
    const auto a = rescale(u.scaled(s), flat_center(), r, 2.0);
    const auto b = rescale(u, flat_center(), r, 2.0);
    for (int i = 0; i < 2; ++i)
      for (std::size_t m = 0; m < a.points.size(); m += 11) CHECK(a.values[i][m] == doctest::Approx(s * b.values[i][m]).epsilon(1e-12));
  }
}

TEST_CASE("a wedge rescales to itself and is fitted exactly") {
  const auto u = wedge(0.7, 3, 1);
  const Center c = flat_center();
  const auto v = rescale(u, c, 0.2, 1.0);
  for (std::size_t m = 0; m < v.points.size(); m += 5) CHECK(v.values[1][m] == doctest::Approx(0.7 * std::max(0.0, v.points[m].y)).epsilon(1e-12));
  const auto fit = fit_profile(v, {0, -1}, ProfileKind::deg1);
  CHECK(fit.profile.j == 1);
  CHECK(std::abs(fit.profile.a - 0.7) <= 1e-6);
  CHECK(fit.relative_residual <= 1e-12);
  CHECK_FALSE(fit.degenerate);
  CHECK(linfty_gap(u, c, 0.2) <= 1e-12);
  CHECK(fit_profile(rescale(wedge(0.0, 2, 0), c, 0.2, 1.0), {0, -1}, ProfileKind::deg1).degenerate);
}

TEST_CASE("the tangential constraint of the degree-two profile") {
  const Center c = flat_center();
  auto pair = [](double angle) {
    const Vec2 e = polar(1.0, angle);
    return from_values({[=](Vec2 x) { return 1.3 * std::max(0.0, -dot(x, e)) * std::max(0.0, x.y); },
                        [=](Vec2 x) { return 1.3 * std::max(0.0, dot(x, e)) * std::max(0.0, x.y); }});
  };
  const auto aligned = fit_profile(rescale(pair(0.0), c, 0.1, 2.0), {0, -1}, ProfileKind::deg2);
  CHECK(aligned.relative_residual <= 1e-12);
  CHECK(std::abs(aligned.profile.a - 1.3) <= 1e-6);
  CHECK(aligned.profile.j == 0);
  CHECK(aligned.profile.k == 1);
  const auto flipped = fit_profile(rescale(pair(pi), c, 0.1, 2.0), {0, -1}, ProfileKind::deg2);
  CHECK(flipped.profile.j == 1);
  CHECK(flipped.relative_residual <= 1e-12);
  const auto tilted = fit_profile(rescale(pair(pi / 6), c, 0.1, 2.0), {0, -1}, ProfileKind::deg2);
  CHECK(tilted.relative_residual >= 0.05);
}

TEST_CASE("interior profiles are recovered for random directions and indices") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 12; ++t) {
    const double angle = 2 * pi * U(rng), a = 0.2 + 3 * U(rng);
    const int N = 2 + static_cast<int>(3 * U(rng));
    const int j = static_cast<int>(N * U(rng));
    const int k = (j + 1 + static_cast<int>((N - 1) * U(rng))) % N;
    const Vec2 e = polar(1.0, angle), x0{U(rng) - 0.5, U(rng) - 0.5};
    std::vector<std::function<double(Vec2)>> values(N, [](Vec2) { return 0.0; });
    values[j] = [=](Vec2 x) { return a * std::max(0.0, dot(x - x0, e)); };
    values[k] = [=](Vec2 x) { return a * std::max(0.0, -dot(x - x0, e)); };
    const auto fit = fit_profile(rescale(from_values(values), Center::interior(x0), 0.1, 1.0), {}, ProfileKind::interior_deg1);
    CHECK(std::abs(fit.profile.a - a) <= 1e-6 * a);
    CHECK(norm(fit.profile.e - (fit.profile.j == j ? e : -e)) <= 1e-5);
    CHECK(((fit.profile.j == j && fit.profile.k == k) || (fit.profile.j == k && fit.profile.k == j)));
    CHECK(fit.relative_residual <= 1e-9);
  }
}

TEST_CASE("rates of exactly homogeneous fields vanish") {
  const auto u = homogeneous_sectors({0, 0}, 0.0, 2.0, 2);
  const auto rate = blowup_rate(u, flat_center(), geometric(0.01, 0.3, 6), 2.0, Modulus::power(1.0, 1.0, 1.0));
  for (const auto& s : rate.samples) {
    CHECK(s.l2_gap <= 1e-20);
    CHECK(s.cauchy <= 1e-20);
  }
  CHECK(std::isinf(rate.decay_exponent));
  CHECK(rate.ok);
  CHECK(rate.csv().rfind("r,L2_gap,Linf_gap,dini_integral\n", 0) == 0);
}

TEST_CASE("rates on the exact two-phase disk partition") {
  const Domain D{DomainParams{}};
  const auto u = disk_mode_one(0.0);
  const Modulus sigma0 = Modulus::power(1.0, 1.0, 1.0);
  RescaleOptions opt;
  opt.h = 1.0 / 128;
  const auto radii = geometric(8 * opt.h, 0.2, 8);
  const auto mid = blowup_rate(u, Center::boundary_plain(D.chart({0, 1}), D), radii, 1.0, sigma0, opt);
  const auto contact = blowup_rate(u, Center::boundary_plain(D.chart({1, 0}), D), radii, 2.0, sigma0, opt);
  CHECK(mid.decay_exponent >= 0.9);
  CHECK(contact.decay_exponent >= 0.9);
  // inward derivative of the normalized mode at the middle of a trace
  CHECK(std::abs(mid.profile.a - 2 * j11 / std::sqrt(pi)) <= 0.01 * mid.profile.a);
  CHECK(mid.profile.kind == ProfileKind::deg1);
  CHECK(contact.profile.kind == ProfileKind::deg2);
  for (std::size_t m = 1; m < radii.size(); ++m) {
    const auto& s = contact.samples[m];
    CHECK(s.cauchy <= contact.c_cauchy * contact.h_ref * (s.dini - contact.samples[m - 1].dini) * (1 + 1e-12));
  }
  const double ratio = mid.c_cauchy_scaled / contact.c_cauchy_scaled;
  CHECK(ratio >= 1.0 / 3);
  CHECK(ratio <= 3.0);
}

TEST_CASE("sup gap is controlled by the L2 gap and the Lipschitz constant") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Center c = flat_center();
  c.straighten = false;
  c.inside = [](Vec2 y) { return y.y > 0.0; };
  int tested = 0;
  for (int t = 0; t < 40; ++t) {
    const double rho = 0.1 + 0.2 * U(rng), height = 0.05 + U(rng);
    const double dist = (1.0 - rho) * U(rng), ang = pi * (0.1 + 0.8 * U(rng));
    const Vec2 x = dist * polar(1.0, ang);
    if (x.y < rho) continue;  // keep the bump inside the wedge's support
    // cone bump: sup height, Lipschitz height / rho
    const auto u = from_values({[=](Vec2 y) {
      const double w = std::max(0.0, y.y);
      return w + height * std::max(0.0, 1.0 - norm(y - x) / rho);
    }});
    const auto v = rescale(u, c, 1.0, 1.0, RescaleOptions{256, 256, 0.0, 8.0});
    BlowupProfile p;
    p.kind = ProfileKind::deg1;
    p.a = 1.0;
    p.normal = {0, -1};
    p.j = 0;
    p.components = 1;
    const double sup = linf_gap(v, p);
    CHECK(sup <= linfty_bound(l2_gap(v, p), height / rho) * 1.02);
    CHECK(sup >= 0.9 * height);
    ++tested;
  }
  CHECK(tested >= 10);
}

TEST_CASE("direction of degree-two profiles follows the boundary") {
  const Domain D{DomainParams{}};
  const Modulus sigma0 = Modulus::power(1.0, 1.0, 1.0);
  double worst = 0.0;
  for (double s : {0.005, 0.01, 0.02, 0.05}) {
    // two nearby contact points of rotated copies of the disk mode
    const Vec2 y = polar(1.0, 0.3), z = polar(1.0, 0.3 + s);
    const Center cy = Center::boundary_plain(D.chart(y), D), cz = Center::boundary_plain(D.chart(z), D);
    const auto fy = fit_profile(rescale(disk_mode_one(0.3), cy, 0.05, 2.0), D.chart(y).outward_normal(), ProfileKind::deg2);
    const auto fz = fit_profile(rescale(disk_mode_one(0.3 + s), cz, 0.05, 2.0), D.chart(z).outward_normal(), ProfileKind::deg2);
    REQUIRE(fy.profile.j == fz.profile.j);
    worst = std::max(worst, norm(fy.profile.e - fz.profile.e) / theta(sigma0, norm(y - z)));
  }
  CHECK(worst <= 1.0);
}

TEST_CASE("amplitude constants") {
  const auto one = amplitude_constants(ProfileKind::deg1);
  CHECK(one.printed == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
  CHECK(one.squared == doctest::Approx(std::sqrt(2.0 / pi)).epsilon(1e-10));
  const auto two = amplitude_constants(ProfileKind::deg2);
  CHECK(two.printed == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-10));
  CHECK(two.squared == doctest::Approx(std::sqrt(8.0 / pi)).epsilon(1e-10));
  CHECK(amplitude_constants(ProfileKind::interior_deg1).squared == doctest::Approx(1.0 / std::sqrt(pi)).epsilon(1e-10));
}

TEST_CASE("normalization of the exact trace profile") {
  // H(r) of the exact mode at the middle of a trace, extrapolated to r = 0
  const Domain D{DomainParams{}};
  const auto u = disk_mode_one(0.0);
  const auto chart = D.chart({0, 1});
  const auto p = frequency_profile(u, Center::boundary_plain(chart, D), geometric(0.005, 0.05, 8));
  const auto growth = check_H_growth(p, 1.0);
  REQUIRE(growth.valid);
  const double a = 2 * j11 / std::sqrt(pi);
  const auto k = amplitude_constants(ProfileKind::deg1);
  CHECK(std::abs(k.squared * std::sqrt(growth.h_limit) - a) <= 0.1 * a);
  CHECK(std::abs(k.printed * std::sqrt(growth.h_limit) - a) > 0.1 * a);
}

TEST_CASE("blow-up errors") {
  const auto u = homogeneous_sectors({0, 0}, 0.0, 1.0, 1);
  const Modulus sigma0 = Modulus::power(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(rescale(u, flat_center(), 0.0, 1.0), Error);
  CHECK_THROWS_AS(rescale(u, flat_center(), 0.01, 1.0, RescaleOptions{64, 32, 0.01, 8.0}), Error);
  CHECK_THROWS_AS(rescale(u, flat_center(), 0.6, 1.0), RangeError);
  CHECK_THROWS_AS(blowup_rate(u, flat_center(), {0.1, 0.2}, 1.5, sigma0), Error);
  CHECK_THROWS_AS(blowup_rate(u, Center::interior({0, 0}), {0.1, 0.2}, 2.0, sigma0), Error);
  CHECK_THROWS_AS(fit_profile(rescale(u, flat_center(), 0.1, 1.0), {0, -1}, ProfileKind::deg2), Error);
  CHECK_THROWS_AS(fit_profile(rescale(u, flat_center(), 0.1, 1.0), {}, ProfileKind::deg1), Error);
}
