#include <cmath>
#include <algorithm>
#include <functional>
#include <map>
#include <numbers>
#include <set>

#include "doctest.h"
#include "fblab/blowup.hpp"
#include "fblab/error.hpp"
#include "fblab/interface.hpp"

using namespace fblab;

namespace {

constexpr double pi = std::numbers::pi;

const Domain& unit_disk() {
  static const Domain D{DomainParams{}};
  return D;
}

// nodal field sampled from closed-form components, no solver cut information
DensityField sampled(double h, std::vector<std::function<double(Vec2)>> parts) {
  DensityField f;
  f.disc = discretize(unit_disk(), h);
  for (auto& p : parts) {
    std::vector<double> v(f.disc->size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::max(0.0, p(f.disc->position(k)));
    f.u.push_back(std::move(v));
    f.lambda.push_back(1.0);
  }
  return f;
}

double bubble(Vec2 x) { return 1.0 - dot(x, x); }

// u = bubble * (x.n - offset), split by sign
DensityField split_line(double h, Vec2 n, double offset) {
  return sampled(h, {[=](Vec2 x) { return bubble(x) * (dot(x, n) - offset); },
                     [=](Vec2 x) { return -bubble(x) * (dot(x, n) - offset); }});
}

// three sectors of opening 120 degrees meeting at the origin
DensityField three_rays(double h, double phase) {
  std::vector<std::function<double(Vec2)>> parts;
  for (int s = 0; s < 3; ++s)
    parts.push_back([=](Vec2 x) {
      const double r = norm(x);
      if (r == 0.0) return 0.0;
      double t = std::atan2(x.y, x.x) - phase - 2.0 * pi * s / 3.0;
      t = std::remainder(t, 2.0 * pi);
      if (t < 0.0 || t > 2.0 * pi / 3.0) return 0.0;
      return bubble(x) * std::pow(r, 1.5) * std::sin(1.5 * t);
    });
  return sampled(h, parts);
}

double dist_to_circle(Vec2 x) { return std::abs(norm(x) - 1.0); }

struct Solved {
  DensityField field;
  InterfaceGraph graph;
};

const Solved& solved(int N, double h) {
  static std::map<std::pair<int, double>, Solved> cache;
  auto key = std::make_pair(N, h);
  auto it = cache.find(key);
  if (it == cache.end()) {
    SolverConfig c;
    c.N = N;
    auto f = minimize_partition(unit_disk(), h, c);
    auto g = extract_interface(f, unit_disk());
    it = cache.emplace(key, Solved{std::move(f), std::move(g)}).first;
  }
  return it->second;
}

}  // namespace

TEST_CASE("a single component has no interface and one full trace") {
  const auto f = sampled(1.0 / 64, {bubble});
  const auto g = extract_interface(f, unit_disk());
  CHECK(g.arcs.empty());
  CHECK(g.junctions.empty());
  CHECK(g.contacts.empty());
  REQUIRE(g.traces.traces.size() == 1);
  CHECK(g.traces.free_points.empty());
  CHECK(g.traces.traces[0].end - g.traces.traces[0].start == doctest::Approx(2.0 * pi).epsilon(0.01));
}

TEST_CASE("three straight rays meet at 120 degrees") {
  for (double phase : {0.1, 0.7, 1.3}) {
    const double h = 1.0 / 64;
    const auto g = extract_interface(three_rays(h, phase), unit_disk());
    REQUIRE(g.junctions.size() == 1);
    CHECK(norm(g.junctions[0].x) < 2.0 * h);
    REQUIRE(g.junctions[0].arcs.size() == 3);
    const auto a = junction_angles(g, g.junctions[0]);
    CHECK(a.deviation < 0.5);
    double total = 0.0;
    for (double t : a.angles) total += t;
    CHECK(total == doctest::Approx(360.0));
    std::set<std::pair<int, int>> pairs;
    for (const auto& arc : g.arcs) {
      CHECK(arc.i != arc.j);
      pairs.insert({arc.i, arc.j});
    }
    CHECK(pairs.size() == 3);
  }
}

TEST_CASE("junction angles need at least three arcs") {
  const auto g = extract_interface(split_line(1.0 / 64, {std::cos(0.3), std::sin(0.3)}, 0.0), unit_disk());
  Junction fake;
  fake.x = {0, 0};
  fake.arcs = {0, 0};
  fake.ends = {0, 1};
  CHECK_THROWS_AS(junction_angles(g, fake), Error);
}

TEST_CASE("a diameter meets the circle orthogonally") {
  for (double angle : {0.3, 1.1, 2.0}) {
    const double h = 1.0 / 64;
    const Vec2 n{std::cos(angle), std::sin(angle)};
    const auto g = extract_interface(split_line(h, n, 0.0), unit_disk());
    REQUIRE(g.arcs.size() == 1);
    CHECK(g.junctions.empty());
    REQUIRE(g.contacts.size() == 2);
    for (const auto& c : g.contacts) {
      CHECK(dist_to_circle(c.x) < 1e-9);
      CHECK(std::abs(dot(c.x, n)) < 2.0 * h);
      CHECK(boundary_contact_angle(g, c).degrees <= 0.5);
    }
  }
}

TEST_CASE("a chord at distance 1/sqrt2 meets the circle at 45 degrees") {
  const double h = 1.0 / 64;
  const auto g = extract_interface(split_line(h, {1.0, 0.0}, 1.0 / std::sqrt(2.0)), unit_disk());
  REQUIRE(g.contacts.size() == 2);
  for (const auto& c : g.contacts) CHECK(boundary_contact_angle(g, c).degrees == doctest::Approx(45.0).epsilon(0.02));
}

TEST_CASE("traces of a split field switch at the zero line") {
  for (double angle : {0.2, 0.9}) {
    const double h = 1.0 / 64;
    const Vec2 n{std::cos(angle), std::sin(angle)};
    const auto f = split_line(h, n, 0.0);
    const auto t = traces_on_boundary(f, unit_disk());
    REQUIRE(t.traces.size() == 2);
    CHECK(t.traces[0].component != t.traces[1].component);
    REQUIRE(t.free_points.size() == 2);
    CHECK(t.isolated);
    for (const auto& p : t.free_points) {
      CHECK(std::abs(dot(p.x, n)) < 2.0 * h);
      CHECK(p.before != p.after);
      CHECK(p.before >= 0);
      CHECK(p.after >= 0);
      CHECK(p.width < 20.0 * h);
    }
    // traces are disjoint intervals
    const auto& a = t.traces[0];
    const auto& b = t.traces[1];
    const double per = 2.0 * pi * (1.0 + 1e-3);
    CHECK(a.end - a.start + b.end - b.start < per);
    for (const auto& tr : t.traces)
      for (const auto& x : tr.points) CHECK((tr.component == 0 ? dot(x, n) : -dot(x, n)) > 0.0);
  }
}

TEST_CASE("the clean-up check on closed-form fields") {
  const double h = 1.0 / 64;
  const Vec2 n{1.0, 0.0};
  const auto f = split_line(h, n, 0.0);
  // far from the interface on the boundary: one component, linear growth
  const auto far = cleanup_check(f, unit_disk(), {-1.0, 0.0}, 0.2);
  CHECK(far.active == 1);
  CHECK(far.dominant == 1);
  CHECK(far.linear_constant > 0.25 * 2.0);
  // on the interface in the interior: both components
  const auto mid = cleanup_check(f, unit_disk(), {0.0, 0.0}, 0.2);
  CHECK(mid.active == 2);
  CHECK(mid.sup[0] == doctest::Approx(mid.sup[1]).epsilon(0.05));
  CHECK_THROWS_AS(cleanup_check(f, unit_disk(), {0.0, 0.0}, 4.0 * h), Error);
}

TEST_CASE("csv and svg output") {
  const auto f = three_rays(1.0 / 32, 0.2);
  const auto g = extract_interface(f, unit_disk());
  const std::string csv = g.csv();
  CHECK(csv.rfind("arc,i,j,x,y\n", 0) == 0);
  std::size_t rows = 0;
  for (const auto& a : g.arcs) rows += a.points.size();
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == rows + 1);
  const std::string svg = interface_svg(f, unit_disk(), g);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("disk with two components") {
  const double h = 1.0 / 64;
  const auto& s = solved(2, h);
  const auto& g = s.graph;
  REQUIRE(g.arcs.size() == 1);
  CHECK(g.junctions.empty());
  REQUIRE(g.contacts.size() == 2);
  // the nodal line is a diameter
  CHECK(g.arcs[0].length() == doctest::Approx(2.0).epsilon(0.03));
  CHECK(norm(g.contacts[0].x + g.contacts[1].x) < 4.0 * h);
  for (const auto& c : g.contacts) CHECK(boundary_contact_angle(g, c).degrees <= 3.0);

  REQUIRE(g.traces.traces.size() == 2);
  REQUIRE(g.traces.free_points.size() == 2);
  CHECK(g.traces.isolated);
  for (const auto& p : g.traces.free_points) {
    CHECK(p.before != p.after);
    // the free points sit where the nodal line reaches the boundary
    double nearest = 1e9;
    for (const auto& c : g.contacts) nearest = std::min(nearest, norm(c.x - p.x));
    CHECK(nearest < 2.0 * h + 0.5 * p.width);
  }
  for (const auto& t : g.traces.traces) {
    const Vec2 m = t.points[t.points.size() / 2];
    const auto cl = cleanup_check(s.field, unit_disk(), m, 0.125);
    CHECK(cl.active == 1);
    CHECK(cl.dominant == t.component);
    const auto v = rescale(GridField(s.field), Center::boundary_plain(unit_disk().chart(m), unit_disk()), 0.125, 1.0);
    const auto fit = fit_profile(v, unit_disk().chart(m).outward_normal(), ProfileKind::deg1);
    CHECK(cl.linear_constant >= 0.25 * fit.profile.a);
  }
  // at a free point both components show up once the ball is large enough for the
  // quadratic growth to clear the zero-set threshold
  for (const auto& p : g.traces.free_points) CHECK(cleanup_check(s.field, unit_disk(), p.x, 0.4).active == 2);
}

TEST_CASE("disk with three components") {
  const double h = 1.0 / 64;
  const auto& s = solved(3, h);
  const auto& g = s.graph;
  REQUIRE(g.arcs.size() == 3);
  REQUIRE(g.junctions.size() == 1);
  CHECK(norm(g.junctions[0].x) < 0.05);
  const auto a = junction_angles(g, g.junctions[0]);
  CHECK(a.deviation < 3.0);
  REQUIRE(g.contacts.size() == 3);
  for (const auto& c : g.contacts) CHECK(boundary_contact_angle(g, c).degrees <= 3.0);
  REQUIRE(g.traces.traces.size() == 3);
  REQUIRE(g.traces.free_points.size() == 3);
  std::set<int> owners;
  for (const auto& t : g.traces.traces) owners.insert(t.component);
  CHECK(owners.size() == 3);
  for (const auto& p : g.traces.free_points) {
    CHECK(p.before != p.after);
    CHECK(p.before >= 0);
    CHECK(p.after >= 0);
  }
}

TEST_CASE("the number of boundary free points is stable under refinement") {
  for (int N : {2, 3}) {
    const auto& coarse = solved(N, 1.0 / 32);
    const auto& fine = solved(N, 1.0 / 64);
    CHECK(coarse.graph.traces.free_points.size() == fine.graph.traces.free_points.size());
    CHECK(fine.graph.traces.free_points.size() == static_cast<std::size_t>(N));
  }
}
