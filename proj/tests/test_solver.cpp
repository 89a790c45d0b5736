#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fblab/error.hpp"
#include "fblab/solver.hpp"

using namespace fblab;

namespace {

constexpr double pi = std::numbers::pi;

// first positive zero of J_nu, by bracketing on a coarse scan and bisection
double bessel_zero(double nu) {
  double a = 0.5, fa = std::cyl_bessel_j(nu, a);
  for (double b = a + 0.05;; b += 0.05) {
    const double fb = std::cyl_bessel_j(nu, b);
    if (fa * fb <= 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b), fm = std::cyl_bessel_j(nu, m);
        if (fa * fm <= 0.0) {
          b = m;
        } else {
          a = m;
          fa = fm;
        }
      }
      return 0.5 * (a + b);
    }
    a = b;
    fa = fb;
  }
}

// root of tan x = x in (pi, 3 pi / 2), which is the first zero of J_{3/2}
double tan_root() {
  double a = pi + 1e-9, b = 1.5 * pi - 1e-9;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (std::tan(m) - m < 0.0) a = m;
    else b = m;
  }
  return 0.5 * (a + b);
}

Domain unit_disk() { return Domain(DomainParams{}); }

Domain rectangle(double w, double h) {
  DomainParams p;
  p.kind = DomainKind::rounded_rectangle;
  p.width = w;
  p.height = h;
  p.corner_radius = 0.0;
  return Domain(p);
}

std::vector<double> sample(const Discretization& d, const std::function<double(Vec2)>& f) {
  std::vector<double> u(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) u[k] = f(d.position(k));
  return u;
}

double mass(const Discretization& d, const std::vector<double>& u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  return s * d.h() * d.h();
}

void check_invariants(const DensityField& f) {
  const Discretization& d = *f.disc;
  for (int i = 0; i < f.N(); ++i) {
    CHECK(std::abs(mass(d, f.u[i]) - 1.0) < 1e-10);
    for (double x : f.u[i]) CHECK_FALSE(x < 0.0);
  }
  std::size_t shared = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    int positive = 0;
    for (int i = 0; i < f.N(); ++i) positive += f.u[i][k] > 0.0;
    shared += positive > 1;
  }
  CHECK(shared == 0);
}

SolverConfig config(int N, std::uint64_t seed = 1) {
  SolverConfig c;
  c.N = N;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("Bessel-zero oracles agree") {
  CHECK(std::abs(bessel_zero(1.5) - tan_root()) < 1e-10);
  CHECK(std::abs(bessel_zero(0.0) - 2.404825557695773) < 1e-10);
  CHECK(std::abs(2 * std::pow(bessel_zero(1.0), 2) - 29.364) < 1e-3);
  CHECK(std::abs(3 * std::pow(tan_root(), 2) - 60.572) < 1e-3);
}

TEST_CASE("Rayleigh quotient of the unit square eigenfunction") {
  auto d = discretize(rectangle(1.0, 1.0), 1.0 / 128);
  auto u = sample(*d, [](Vec2 x) { return std::sin(pi * x.x) * std::sin(pi * x.y); });
  const double lam = eigenvalue(*d, u);
  CHECK(std::abs(lam - 2 * pi * pi) < 5e-3 * 2 * pi * pi);
  for (double& x : u) x *= 2.0;
  CHECK(eigenvalue(*d, u) == doctest::Approx(lam).epsilon(1e-14));
}

TEST_CASE("Rayleigh quotient of the unit disk eigenfunction") {
  const double j = bessel_zero(0.0);
  auto d = discretize(unit_disk(), 1.0 / 128);
  auto u = sample(*d, [&](Vec2 x) { return std::cyl_bessel_j(0.0, j * std::hypot(x.x, x.y)); });
  CHECK(std::abs(eigenvalue(*d, u) - j * j) < 5e-3 * j * j);
}

TEST_CASE("Rayleigh quotient is invariant under scaling") {
  auto d = discretize(unit_disk(), 1.0 / 32);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> u(d->size());
    for (double& x : u) x = U(rng);
    const double s = std::exp(10.0 * (U(rng) - 0.5));
    const double a = eigenvalue(*d, u);
    for (double& x : u) x *= s;
    CHECK(eigenvalue(*d, u) == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("Rayleigh quotient of the zero function is an error") {
  auto d = discretize(unit_disk(), 1.0 / 16);
  CHECK_THROWS_AS(eigenvalue(*d, std::vector<double>(d->size(), 0.0)), Error);
}

TEST_CASE("two exact square eigenfunctions have vanishing residuals") {
  const double h = 1.0 / 64;
  DensityField f;
  f.disc = discretize(rectangle(2.0, 1.0), h);
  const auto& d = *f.disc;
  f.u.push_back(sample(d, [](Vec2 x) { return x.x < 1.0 ? std::sin(pi * x.x) * std::sin(pi * x.y) : 0.0; }));
  f.u.push_back(sample(d, [](Vec2 x) { return x.x > 1.0 ? std::sin(pi * (x.x - 1.0)) * std::sin(pi * x.y) : 0.0; }));
  for (auto& u : f.u) {
    const double c = 1.0 / std::sqrt(mass(d, u));
    for (double& x : u) x *= c;
  }
  f.lambda = {eigenvalue(d, f.u[0]), eigenvalue(d, f.u[1])};
  const auto [sub, super] = extremality_residual(f, 0.5);
  CHECK(sub <= 1e-8);
  CHECK(super <= 1e-8);
  check_invariants(f);
}

TEST_CASE("random segregated densities violate extremality") {
  const double h = 1.0 / 32;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    DensityField f;
    f.disc = discretize(unit_disk(), h);
    const auto& d = *f.disc;
    f.u = voronoi_start(d, 2, 100 + t);
    for (auto& u : f.u)
      for (double& x : u)
        if (x > 0.0) x = U(rng);
    for (int i = 0; i < 2; ++i) f.lambda.push_back(eigenvalue(d, f.u[i]));
    const auto [sub, super] = extremality_residual(f, 1.0);
    CHECK(std::max(sub, super) > 0.1);
  }
}

TEST_CASE("Lipschitz estimate of a distance wedge") {
  auto d = discretize(rectangle(1.0, 1.0), 1.0 / 50);
  for (double a : {0.5, 1.0, 3.0}) {
    DensityField f;
    f.disc = d;
    f.u.push_back(sample(*d, [&](Vec2 x) { return a * std::min({x.x, 1.0 - x.x, x.y, 1.0 - x.y}); }));
    CHECK(lipschitz_estimate(f) == doctest::Approx(a).epsilon(1e-9));
    f.u.push_back(std::vector<double>(d->size(), 0.0));
    CHECK(lipschitz_estimate(f) == doctest::Approx(a).epsilon(1e-9));
  }
}

TEST_CASE("single component gives the first eigenvalue of the domain") {
  const double j = bessel_zero(0.0);
  auto f = minimize_partition(unit_disk(), 1.0 / 64, config(1));
  CHECK(f.N() == 1);
  CHECK(std::abs(f.lambda[0] - j * j) < 5e-3 * j * j);
  CHECK(f.pieces[0] == 1);
  check_invariants(f);
}

TEST_CASE("disk with two components") {
  const double target = 2 * std::pow(bessel_zero(1.0), 2);
  const double h = 1.0 / 64;
  auto f = minimize_partition(unit_disk(), h, config(2));
  CHECK(std::abs(f.sum_lambda() - target) < 0.02 * target);
  check_invariants(f);
  for (int p : f.pieces) CHECK(p == 1);
  const double j0 = bessel_zero(0.0);
  for (double l : f.lambda) {
    CHECK(l >= j0 * j0);
    CHECK(l <= f.sum_lambda());
  }
  REQUIRE(f.history.size() >= 2);
  for (std::size_t s = 1; s < f.history.size(); ++s) CHECK(f.history[s] <= f.history[s - 1] * (1 + 1e-13));
  const auto [sub, super] = extremality_residual(f, 1.0);
  CHECK(sub <= h);
  CHECK(super <= h);
  const double lip = lipschitz_estimate(f);
  CHECK(lip > 1.0);
  CHECK(lip < 20.0);
}

TEST_CASE("disk with three components") {
  const double target = 3 * std::pow(tan_root(), 2);
  const double h = 1.0 / 64;
  auto f = minimize_partition(unit_disk(), h, config(3));
  CHECK(std::abs(f.sum_lambda() - target) < 0.03 * target);
  check_invariants(f);
  for (std::size_t s = 1; s < f.history.size(); ++s) CHECK(f.history[s] <= f.history[s - 1] * (1 + 1e-13));
  const auto [sub, super] = extremality_residual(f, 1.0);
  CHECK(sub <= h);
  CHECK(super <= h);
}

TEST_CASE("relabeling the start permutes the result") {
  auto d = discretize(unit_disk(), 1.0 / 32);
  SolverConfig c = config(3);
  auto start = voronoi_start(*d, 3, 7);
  auto a = relax_partition(d, start, c);
  const std::vector<int> perm{2, 0, 1};
  std::vector<std::vector<double>> permuted(3);
  for (int i = 0; i < 3; ++i) permuted[i] = start[perm[i]];
  auto b = relax_partition(d, permuted, c);
  for (int i = 0; i < 3; ++i) {
    std::size_t mismatch = 0;
    for (std::size_t k = 0; k < d->size(); ++k) mismatch += (b.u[i][k] > 0.0) != (a.u[perm[i]][k] > 0.0);
    CHECK(mismatch == 0);
    CHECK(b.lambda[i] == doctest::Approx(a.lambda[perm[i]]).epsilon(1e-9));
  }
}

TEST_CASE("invariants hold for random seeds and domains") {
  std::vector<Domain> domains{unit_disk(), rectangle(2.0, 1.0)};
  for (std::uint64_t seed = 1; seed <= 3; ++seed)
    for (const auto& D : domains) {
      auto f = minimize_partition(D, 1.0 / 32, config(2, seed));
      check_invariants(f);
      for (std::size_t s = 1; s < f.history.size(); ++s) CHECK(f.history[s] <= f.history[s - 1] * (1 + 1e-13));
      const double fk = std::pow(bessel_zero(0.0), 2) * pi / D.area();
      for (double l : f.lambda) CHECK(l >= fk);
    }
}

TEST_CASE("configuration and size checks") {
  SolverConfig c = config(2);
  c.penalties = {1.0, 1.0};
  CHECK_THROWS_AS(minimize_partition(unit_disk(), 1.0 / 16, c), Error);
  c.penalties = {};
  CHECK_THROWS_AS(minimize_partition(unit_disk(), 1.0 / 16, c), Error);
  CHECK_THROWS_AS(minimize_partition(unit_disk(), 0.25, config(2)), Error);
}

TEST_CASE("density csv has one row per node") {
  auto f = minimize_partition(unit_disk(), 1.0 / 16, config(2));
  const std::string csv = f.csv();
  CHECK(csv.rfind("i,x,y,u_1,u_2\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == f.disc->size() + 1);
}
