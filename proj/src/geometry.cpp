#include "fblab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "fblab/error.hpp"
#include "fblab/quadrature.hpp"

namespace fblab {

namespace {

constexpr double pi = std::numbers::pi;

double golden_min(const std::function<double(double)>& f, double a, double b, int iterations = 80) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iterations; ++k) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double rounded_rect_sd(const DomainParams& p, Vec2 x) {
  const Vec2 c{0.5 * p.width, 0.5 * p.height};
  const double qx = std::abs(x.x - c.x) - (0.5 * p.width - p.corner_radius);
  const double qy = std::abs(x.y - c.y) - (0.5 * p.height - p.corner_radius);
  const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
  return outside + std::min(std::max(qx, qy), 0.0) - p.corner_radius;
}

}  // namespace

BoundaryChart BoundaryChart::flat(const Modulus& sigma, double radius) {
  BoundaryChart c;
  c.origin = {0.0, 0.0};
  c.frame = Mat2::identity();
  c.radius = radius;
  c.graph = [](double) { return 0.0; };
  c.graph_slope = [](double) { return 0.0; };
  c.sigma = sigma;
  c.sigma_regular = sigma.regular() ? sigma : smooth_modulus(sigma);
  return c;
}

Domain::Domain(DomainParams params) : params_(params) {
  switch (params_.kind) {
    case DomainKind::disk:
      if (params_.radius <= 0.0) throw Error("geometry", "disk radius must be positive");
      lower_ = {-params_.radius, -params_.radius};
      upper_ = {params_.radius, params_.radius};
      break;
    case DomainKind::rounded_rectangle:
      if (params_.width <= 0.0 || params_.height <= 0.0 || params_.corner_radius < 0.0 ||
          2.0 * params_.corner_radius > std::min(params_.width, params_.height))
        throw Error("geometry", "invalid rounded rectangle");
      lower_ = {0.0, 0.0};
      upper_ = {params_.width, params_.height};
      break;
    case DomainKind::epigraph:
      if (params_.graph_amplitude < 0.0 || params_.graph_exponent <= 0.0 || params_.graph_exponent > 1.0 ||
          params_.half_width <= 0.0 || params_.top <= graph(params_.half_width))
        throw Error("geometry", "invalid epigraph domain");
      lower_ = {-params_.half_width, 0.0};
      upper_ = {params_.half_width, params_.top};
      break;
  }
  if (params_.chart_radius <= 0.0) throw Error("geometry", "chart radius must be positive");
}

double Domain::graph(double x) const {
  return params_.graph_amplitude * std::pow(std::abs(x), 1.0 + params_.graph_exponent);
}

double Domain::graph_slope(double x) const {
  const double b = params_.graph_exponent;
  const double v = params_.graph_amplitude * (1.0 + b) * std::pow(std::abs(x), b);
  return x < 0.0 ? -v : v;
}

double Domain::distance_to_graph(Vec2 p, double& foot) const {
  const double L = params_.half_width;
  auto d2 = [&](double s) { return (s - p.x) * (s - p.x) + (graph(s) - p.y) * (graph(s) - p.y); };
  const int n = 400;
  double best = std::numeric_limits<double>::infinity();
  int kb = 0;
  for (int k = 0; k <= n; ++k) {
    const double v = d2(-L + 2.0 * L * k / n);
    if (v < best) { best = v; kb = k; }
  }
  const double a = -L + 2.0 * L * std::max(kb - 1, 0) / n;
  const double b = -L + 2.0 * L * std::min(kb + 1, n) / n;
  foot = golden_min(d2, a, b);
  return std::sqrt(d2(foot));
}

double Domain::signed_distance(Vec2 p) const {
  switch (params_.kind) {
    case DomainKind::disk:
      return norm(p) - params_.radius;
    case DomainKind::rounded_rectangle:
      return rounded_rect_sd(params_, p);
    case DomainKind::epigraph: {
      double foot = 0.0;
      const double dg = distance_to_graph(p, foot);
      const bool above = std::abs(p.x) < params_.half_width ? p.y > graph(p.x) : p.y > graph(params_.half_width);
      const double sg = above ? -dg : dg;
      const double side = std::abs(p.x) - params_.half_width;
      const double top = p.y - params_.top;
      return std::max({sg, side, top});
    }
  }
  return 0.0;
}

double Domain::area() const {
  switch (params_.kind) {
    case DomainKind::disk:
      return pi * params_.radius * params_.radius;
    case DomainKind::rounded_rectangle:
      return params_.width * params_.height - (4.0 - pi) * params_.corner_radius * params_.corner_radius;
    case DomainKind::epigraph: {
      const double L = params_.half_width, b = params_.graph_exponent;
      return 2.0 * L * params_.top - 2.0 * params_.graph_amplitude * std::pow(L, 2.0 + b) / (2.0 + b);
    }
  }
  return 0.0;
}

double Domain::inradius() const {
  switch (params_.kind) {
    case DomainKind::disk:
      return params_.radius;
    case DomainKind::rounded_rectangle:
      return 0.5 * std::min(params_.width, params_.height);
    case DomainKind::epigraph: {
      // largest distance to the boundary over a coarse grid
      double best = 0.0;
      const int n = 60;
      for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) {
          const Vec2 q{lower_.x + (upper_.x - lower_.x) * i / n, lower_.y + (upper_.y - lower_.y) * j / n};
          const double d = -signed_distance(q);
          best = std::max(best, d);
        }
      return best;
    }
  }
  return 0.0;
}

double Domain::perimeter() const {
  const auto& p = params_;
  switch (p.kind) {
    case DomainKind::disk:
      return 2.0 * pi * p.radius;
    case DomainKind::rounded_rectangle:
      return 2.0 * (p.width + p.height) - (8.0 - 2.0 * pi) * p.corner_radius;
    case DomainKind::epigraph: {
      const double L = p.half_width;
      const double graph_length =
          integrate([&](double s) { return std::sqrt(1.0 + graph_slope(s) * graph_slope(s)); }, -L, 0.0, 1e-12) * 2.0;
      return graph_length + 2.0 * (p.top - graph(L)) + 2.0 * L;
    }
  }
  return 0.0;
}

BoundaryPoint Domain::boundary_at(double t) const {
  const auto& p = params_;
  const double per = perimeter();
  t = std::fmod(t, per);
  if (t < 0.0) t += per;
  switch (p.kind) {
    case DomainKind::disk: {
      const double a = t / p.radius;
      return {polar(p.radius, a), polar(1.0, a)};
    }
    case DomainKind::rounded_rectangle: {
      const double rc = p.corner_radius;
      const double sx = p.width - 2.0 * rc, sy = p.height - 2.0 * rc, arc = 0.5 * pi * rc;
      // bottom, corner, right, corner, top, corner, left, corner
      const double lengths[8] = {sx, arc, sy, arc, sx, arc, sy, arc};
      const Vec2 starts[4] = {{rc, 0.0}, {p.width, rc}, {p.width - rc, p.height}, {0.0, p.height - rc}};
      const Vec2 dirs[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
      const Vec2 centers[4] = {{p.width - rc, rc}, {p.width - rc, p.height - rc}, {rc, p.height - rc}, {rc, rc}};
      for (int k = 0; k < 8; ++k) {
        if (t <= lengths[k] || k == 7) {
          const int side = k / 2;
          if (k % 2 == 0) {
            return {starts[side] + t * dirs[side], {dirs[side].y, -dirs[side].x}};
          }
          const double a0 = -0.5 * pi + side * 0.5 * pi;
          const double a = a0 + (rc > 0.0 ? t / rc : 0.0);
          return {centers[side] + polar(rc, a), polar(1.0, a)};
        }
        t -= lengths[k];
      }
      break;
    }
    case DomainKind::epigraph: {
      const double L = p.half_width;
      auto speed = [&](double s) { return std::sqrt(1.0 + graph_slope(s) * graph_slope(s)); };
      const double half = integrate(speed, -L, 0.0, 1e-12);
      if (t < 2.0 * half) {
        // invert arc length along the graph by bisection
        double lo = -L, hi = L;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double len = mid <= 0.0 ? half - integrate(speed, mid, 0.0, 1e-10) : half + integrate(speed, 0.0, mid, 1e-10);
          (len < t ? lo : hi) = mid;
        }
        const double x = 0.5 * (lo + hi);
        return {{x, graph(x)}, normalized(Vec2{graph_slope(x), -1.0})};
      }
      t -= 2.0 * half;
      const double side = p.top - graph(L);
      if (t < side) return {{L, graph(L) + t}, {1.0, 0.0}};
      t -= side;
      if (t < 2.0 * L) return {{L - t, p.top}, {0.0, 1.0}};
      t -= 2.0 * L;
      return {{-L, p.top - std::min(t, side)}, {-1.0, 0.0}};
    }
  }
  return {};
}

BoundaryPoint Domain::project(Vec2 q) const {
  const auto& p = params_;
  switch (p.kind) {
    case DomainKind::disk: {
      const double r = norm(q);
      const Vec2 n = r > 0.0 ? q / r : Vec2{1.0, 0.0};
      return {p.radius * n, n};
    }
    case DomainKind::rounded_rectangle: {
      const double rc = p.corner_radius;
      const Vec2 lo{rc, rc}, hi{p.width - rc, p.height - rc};
      const Vec2 inner{std::clamp(q.x, lo.x, hi.x), std::clamp(q.y, lo.y, hi.y)};
      const bool corner = (q.x < lo.x || q.x > hi.x) && (q.y < lo.y || q.y > hi.y);
      if (corner) {
        const Vec2 n = normalized(q - inner);
        return {inner + rc * n, n};
      }
      // nearest straight side
      const double d[4] = {q.y, p.width - q.x, p.height - q.y, q.x};
      const int k = static_cast<int>(std::min_element(d, d + 4) - d);
      const Vec2 normals[4] = {{0.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}};
      Vec2 x = q;
      if (k == 0) x.y = 0.0;
      if (k == 1) x.x = p.width;
      if (k == 2) x.y = p.height;
      if (k == 3) x.x = 0.0;
      x.x = std::clamp(x.x, 0.0, p.width);
      x.y = std::clamp(x.y, 0.0, p.height);
      // a projection landing on a corner arc is handled by the corner branch of the clamped point
      if ((x.x < lo.x || x.x > hi.x) && (x.y < lo.y || x.y > hi.y)) {
        const Vec2 n = normalized(x - Vec2{std::clamp(x.x, lo.x, hi.x), std::clamp(x.y, lo.y, hi.y)});
        const Vec2 c{std::clamp(x.x, lo.x, hi.x), std::clamp(x.y, lo.y, hi.y)};
        return {c + rc * n, n};
      }
      return {x, normals[k]};
    }
    case DomainKind::epigraph: {
      const double L = p.half_width;
      double foot = 0.0;
      const double dg = distance_to_graph(q, foot);
      BoundaryPoint best{{foot, graph(foot)}, normalized(Vec2{graph_slope(foot), -1.0})};
      double bd = dg;
      const double yl = graph(L);
      const BoundaryPoint cands[3] = {{{L, std::clamp(q.y, yl, p.top)}, {1.0, 0.0}},
                                      {{-L, std::clamp(q.y, yl, p.top)}, {-1.0, 0.0}},
                                      {{std::clamp(q.x, -L, L), p.top}, {0.0, 1.0}}};
      for (const auto& c : cands) {
        const double d = norm(q - c.x);
        if (d < bd) { bd = d; best = c; }
      }
      return best;
    }
  }
  return {};
}

std::vector<BoundaryPoint> Domain::boundary_polyline(double spacing) const {
  if (spacing <= 0.0) throw Error("geometry", "polyline spacing must be positive");
  const double per = perimeter();
  const int n = std::max(8, static_cast<int>(std::ceil(per / spacing)));
  std::vector<BoundaryPoint> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(boundary_at(per * k / n));
  return out;
}

std::string Domain::boundary_csv(double spacing) const {
  std::ostringstream os;
  os.precision(12);
  os << "x,y,nx,ny\n";
  for (const auto& b : boundary_polyline(spacing)) os << b.x.x << ',' << b.x.y << ',' << b.normal.x << ',' << b.normal.y << '\n';
  return os.str();
}

bool Domain::chart_available(Vec2 x0) const {
  const auto& p = params_;
  switch (p.kind) {
    case DomainKind::disk:
      return std::abs(norm(x0) - p.radius) < 1e-9 * p.radius;
    case DomainKind::rounded_rectangle: {
      if (std::abs(rounded_rect_sd(p, x0)) > 1e-9) return false;
      const double rc = p.corner_radius, keep = 2.0 * rc;
      const bool horizontal = std::abs(x0.y) < 1e-9 || std::abs(x0.y - p.height) < 1e-9;
      const bool vertical = std::abs(x0.x) < 1e-9 || std::abs(x0.x - p.width) < 1e-9;
      if (horizontal) return x0.x >= rc + keep && x0.x <= p.width - rc - keep;
      if (vertical) return x0.y >= rc + keep && x0.y <= p.height - rc - keep;
      return false;
    }
    case DomainKind::epigraph:
      return std::abs(x0.x) < p.half_width - 2.0 * p.chart_radius && std::abs(x0.y - graph(x0.x)) < 1e-9;
  }
  return false;
}

BoundaryChart Domain::chart(Vec2 x0) const {
  if (!chart_available(x0)) throw Error("geometry", "no boundary chart at the requested point");
  const auto& p = params_;
  BoundaryChart c;
  c.origin = x0;
  c.radius = p.chart_radius;
  switch (p.kind) {
    case DomainKind::disk: {
      const double R = p.radius, Rc = std::min(p.chart_radius, 0.5 * R);
      c.radius = Rc;
      const Vec2 nu = x0 / norm(x0);
      c.frame = Mat2::from_columns(perp(nu), -nu);
      c.graph = [R](double s) { return s * s / (R + std::sqrt(std::max(0.0, R * R - s * s))); };
      c.graph_slope = [R](double s) { return s / std::sqrt(std::max(1e-300, R * R - s * s)); };
      const double lip = R * R / std::pow(R * R - Rc * Rc, 1.5);
      c.sigma = Modulus::power(lip, 1.0, 2.0 * Rc);
      break;
    }
    case DomainKind::rounded_rectangle: {
      const double rc = p.corner_radius;
      const BoundaryPoint b = project(x0);
      c.frame = Mat2::from_columns(perp(b.normal), -b.normal);
      const bool horizontal = std::abs(b.normal.y) > 0.5;
      const double along = horizontal ? x0.x : x0.y;
      const double len = horizontal ? p.width : p.height;
      c.radius = std::min(p.chart_radius, std::min(along - rc, len - rc - along));
      c.graph = [](double) { return 0.0; };
      c.graph_slope = [](double) { return 0.0; };
      c.sigma = Modulus::power(0.0, 1.0, 2.0 * c.radius);
      break;
    }
    case DomainKind::epigraph: {
      const double g0 = graph_slope(x0.x);
      const double n0 = std::sqrt(1.0 + g0 * g0);
      const Vec2 tau{1.0 / n0, g0 / n0};
      const Vec2 inward{-g0 / n0, 1.0 / n0};
      c.frame = Mat2::from_columns(tau, inward);
      const double R = p.chart_radius;
      auto self = *this;
      c.graph = [self, x0, tau, inward, R](double s) {
        auto F = [&](double t) {
          const Vec2 q = x0 + s * tau + t * inward;
          return q.y - self.graph(q.x);
        };
        double lo = -2.0 * R, hi = 2.0 * R;
        for (int it = 0; it < 100 && hi - lo > 1e-16; ++it) {
          const double mid = 0.5 * (lo + hi);
          (F(mid) > 0.0 ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
      };
      auto graph_fn = c.graph;
      c.graph_slope = [self, x0, tau, inward, g0, graph_fn](double s) {
        const Vec2 q = x0 + s * tau + graph_fn(s) * inward;
        const double g = self.graph_slope(q.x);
        return (g - g0) / (1.0 + g0 * g);
      };
      const double b = p.graph_exponent;
      // Hoelder modulus of the slope, with a factor 2 for the tilt of the local frame
      const double hold = p.graph_amplitude * (1.0 + b) * std::pow(2.0, 1.0 - b);
      c.sigma = Modulus::power(2.0 * hold, b, 2.0 * R);
      break;
    }
  }
  c.sigma_regular = c.sigma.regular() ? c.sigma : smooth_modulus(c.sigma);
  return c;
}

double Domain::boundary_fraction(Vec2 inside, Vec2 outside) const {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (contains(inside + mid * (outside - inside)) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Grid Domain::make_grid(double h) const {
  if (h <= 0.0) throw Error("geometry", "grid spacing must be positive");
  Grid g;
  g.h = h;
  g.origin = {(std::floor(lower_.x / h) - 2.0) * h, (std::floor(lower_.y / h) - 2.0) * h};
  g.nx = static_cast<int>(std::ceil((upper_.x - g.origin.x) / h)) + 3;
  g.ny = static_cast<int>(std::ceil((upper_.y - g.origin.y) / h)) + 3;
  return g;
}

std::vector<std::uint8_t> Domain::mask(const Grid& grid) const {
  std::vector<std::uint8_t> m(grid.size(), 0);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) m[grid.index(i, j)] = contains(grid.node(i, j)) ? 1 : 0;
  return m;
}

bool mask_connected(const Grid& grid, const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::size_t total = 0, start = mask.size();
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) {
      ++total;
      if (start == mask.size()) start = k;
    }
  if (total == 0) return false;
  std::queue<std::size_t> q;
  q.push(start);
  seen[start] = 1;
  std::size_t reached = 0;
  while (!q.empty()) {
    const std::size_t k = q.front();
    q.pop();
    ++reached;
    const int i = static_cast<int>(k % grid.nx), j = static_cast<int>(k / grid.nx);
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int m = 0; m < 4; ++m) {
      const int a = i + di[m], b = j + dj[m];
      if (a < 0 || b < 0 || a >= grid.nx || b >= grid.ny) continue;
      const std::size_t n = grid.index(a, b);
      if (mask[n] && !seen[n]) {
        seen[n] = 1;
        q.push(n);
      }
    }
  }
  return reached == total;
}

double cutoff(double t, double R) {
  if (t <= 0.5 * R) return 1.0;
  if (t >= R) return 0.0;
  const double u = (t - 0.5 * R) / (0.5 * R);
  return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double cutoff_derivative(double t, double R) {
  if (t <= 0.5 * R || t >= R) return 0.0;
  const double u = (t - 0.5 * R) / (0.5 * R);
  return -30.0 * u * u * (1.0 - u) * (1.0 - u) / (0.5 * R);
}

namespace {

// 3 eta(t) t sigma(t) and its derivative
double lift(const BoundaryChart& c, double t) {
  if (c.sigma_regular.is_zero() || t <= 0.0) return 0.0;
  return 3.0 * cutoff(t, c.radius) * t * c.sigma_regular(t);
}

double lift_derivative(const BoundaryChart& c, double t) {
  if (c.sigma_regular.is_zero() || t <= 0.0 || t >= c.radius) return 0.0;
  const double eta = cutoff(t, c.radius);
  return 3.0 * cutoff_derivative(t, c.radius) * t * c.sigma_regular(t) + eta * alpha_of_sigma(c.sigma_regular, t);
}

}  // namespace

Vec2 psi(const BoundaryChart& chart, Vec2 x) { return {x.x, x.y + chart.lift_sign * lift(chart, norm(x))}; }

Vec2 psi_world(const BoundaryChart& chart, Vec2 x) { return chart.to_world(psi(chart, x)); }

Mat2 psi_jacobian(const BoundaryChart& chart, Vec2 x) {
  const double r = norm(x);
  if (r == 0.0) return Mat2::identity();
  const double g = chart.lift_sign * lift_derivative(chart, r) / r;
  return {1.0, 0.0, g * x.x, 1.0 + g * x.y};
}

Vec2 psi_inverse(const BoundaryChart& chart, Vec2 world) {
  const Vec2 y = chart.to_local(world);
  Vec2 x = y;
  for (int it = 0; it < 60; ++it) {
    const double f = psi(chart, x).y - y.y;
    const double df = psi_jacobian(chart, x).d;
    const double step = f / df;
    x.y -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x.y))) break;
  }
  return x;
}

double transformed_level(const BoundaryChart& chart, Vec2 x) { return psi(chart, x).y - chart.graph(x.x); }

CoefficientField::CoefficientField(BoundaryChart chart) : chart_(std::move(chart)) {}

CoefficientField coefficients(const BoundaryChart& chart) { return CoefficientField(chart); }

Mat2 CoefficientField::A(Vec2 x) const {
  const Mat2 J = psi_jacobian(chart_, x);
  const Mat2 Ji = J.inverse();
  return J.det() * (Ji * Ji.transpose());
}

double CoefficientField::p(Vec2 x) const { return psi_jacobian(chart_, x).det(); }

double CoefficientField::mu(Vec2 x) const {
  const double r2 = dot(x, x);
  if (r2 == 0.0) return 1.0;
  return dot(A(x) * x, x) / r2;
}

Vec2 CoefficientField::alpha_vec(Vec2 x) const {
  const double r = norm(x);
  if (r == 0.0) return {};
  return A(x) * x / r;
}

Vec2 CoefficientField::beta(Vec2 x) const {
  if (norm(x) == 0.0) return {};
  return A(x) * x / mu(x);
}

namespace {

double fd_step(Vec2 x) { return std::max(1e-5 * norm(x), 1e-9); }

template <class F>
Vec2 fd_gradient(F f, Vec2 x) {
  const double e = fd_step(x);
  return {(f(x + Vec2{e, 0.0}) - f(x - Vec2{e, 0.0})) / (2.0 * e), (f(x + Vec2{0.0, e}) - f(x - Vec2{0.0, e})) / (2.0 * e)};
}

}  // namespace

double CoefficientField::grad_A(Vec2 x) const {
  double best = 0.0;
  for (int k = 0; k < 4; ++k) {
    auto entry = [&](Vec2 y) {
      const Mat2 m = A(y);
      return k == 0 ? m.a : k == 1 ? m.b : k == 2 ? m.c : m.d;
    };
    best = std::max(best, norm(fd_gradient(entry, x)));
  }
  return best;
}

double CoefficientField::grad_p(Vec2 x) const { return norm(fd_gradient([&](Vec2 y) { return p(y); }, x)); }

double CoefficientField::grad_mu(Vec2 x) const { return norm(fd_gradient([&](Vec2 y) { return mu(y); }, x)); }

double CoefficientField::div_alpha(Vec2 x) const {
  const double e = fd_step(x);
  return (alpha_vec(x + Vec2{e, 0.0}).x - alpha_vec(x - Vec2{e, 0.0}).x) / (2.0 * e) +
         (alpha_vec(x + Vec2{0.0, e}).y - alpha_vec(x - Vec2{0.0, e}).y) / (2.0 * e);
}

double CoefficientField::div_beta(Vec2 x) const {
  const double e = fd_step(x);
  return (beta(x + Vec2{e, 0.0}).x - beta(x - Vec2{e, 0.0}).x) / (2.0 * e) +
         (beta(x + Vec2{0.0, e}).y - beta(x - Vec2{0.0, e}).y) / (2.0 * e);
}

double CoefficientField::dbeta_minus_identity(Vec2 x) const {
  const double e = fd_step(x);
  const Vec2 c0 = (beta(x + Vec2{e, 0.0}) - beta(x - Vec2{e, 0.0})) / (2.0 * e);
  const Vec2 c1 = (beta(x + Vec2{0.0, e}) - beta(x - Vec2{0.0, e})) / (2.0 * e);
  return op_norm(Mat2::from_columns(c0, c1) - Mat2::identity());
}

StarshapedMargins check_starshaped(const BoundaryChart& chart, double r, int samples) {
  if (r <= 0.0 || r > 0.5 * chart.radius * (1.0 + 1e-12)) throw Error("geometry", "starshapedness radius must lie in (0, R/2]");
  const CoefficientField coef(chart);
  StarshapedMargins out;
  out.A_margin = out.x_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double x1 = -r + 2.0 * r * (k + 0.5) / samples;
    double lo = -r, hi = r;
    if (transformed_level(chart, {x1, lo}) > 0.0 || transformed_level(chart, {x1, hi}) < 0.0) continue;
    for (int it = 0; it < 100 && hi - lo > 1e-17; ++it) {
      const double mid = 0.5 * (lo + hi);
      (transformed_level(chart, {x1, mid}) > 0.0 ? hi : lo) = mid;
    }
    const Vec2 x{x1, 0.5 * (lo + hi)};
    const double rx = norm(x);
    if (rx >= r || rx == 0.0) continue;
    const Mat2 J = psi_jacobian(chart, x);
    const Vec2 grad{J.c - chart.graph_slope(x1), J.d};
    const Vec2 nu = -grad / norm(grad);
    const double s = rx * chart.sigma_regular(rx);
    out.A_margin = std::min(out.A_margin, dot(coef.A(x) * x, nu) - s);
    out.x_margin = std::min(out.x_margin, dot(x, nu) - 0.5 * s);
    ++out.samples;
  }
  if (out.samples == 0) throw Error("geometry", "no samples of the transformed boundary inside the ball");
  return out;
}

double RegionSample::area() const {
  double s = 0.0;
  for (double w : volume_weights) s += w;
  return s;
}

double RegionSample::surface_length() const {
  double s = 0.0;
  for (double w : surface_weights) s += w;
  return s;
}

RegionSample transformed_region(const BoundaryChart& chart, double r, int n_r, int n_theta) {
  if (r <= 0.0 || r > 0.5 * chart.radius * (1.0 + 1e-12)) throw Error("geometry", "region radius must lie in (0, R/2]");
  const PolarRule rule = make_polar_rule(r, n_r, n_theta);
  RegionSample out;
  for (const auto& node : rule.radial)
    for (double a : rule.angles) {
      const Vec2 x = polar(node.x, a);
      if (transformed_level(chart, x) > 0.0) {
        out.volume_points.push_back(x);
        out.volume_weights.push_back(node.w * rule.dtheta);
      }
    }
  for (double a : rule.angles) {
    const Vec2 x = polar(r, a);
    if (transformed_level(chart, x) > 0.0) {
      out.surface_points.push_back(x);
      out.surface_weights.push_back(r * rule.dtheta);
    }
  }
  return out;
}

double CoefficientBounds::kappa() const {
  return std::max({A_minus_I, p_minus_1, mu_minus_1, beta_minus_x, grad_A, grad_mu, div_alpha, dbeta, div_beta,
                   max_eigen, min_eigen > 0.0 ? 1.0 / min_eigen : std::numeric_limits<double>::infinity()});
}

CoefficientBounds fit_coefficient_bounds(const BoundaryChart& chart, double r, int n_r, int n_theta) {
  const CoefficientField coef(chart);
  CoefficientBounds b;
  b.min_eigen = b.min_mu = std::numeric_limits<double>::infinity();
  auto ratio = [](double num, double den) {
    if (den > 0.0) return num / den;
    return num <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  const PolarRule rule = make_polar_rule(r, n_r, n_theta);
  for (const auto& node : rule.radial)
    for (double a : rule.angles) {
      const Vec2 x = polar(node.x, a);
      b.max_det_deviation = std::max(b.max_det_deviation, std::abs(coef.det(x) - 1.0));
      if (transformed_level(chart, x) <= 0.0) continue;
      const double t = norm(x);
      const double s = chart.sigma_regular(t);
      const Mat2 A = coef.A(x);
      const double tr = A.a + A.d, dt = A.det();
      const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - dt));
      b.min_eigen = std::min(b.min_eigen, 0.5 * tr - disc);
      b.max_eigen = std::max(b.max_eigen, 0.5 * tr + disc);
      const double mu = coef.mu(x);
      b.min_mu = std::min(b.min_mu, mu);
      b.max_mu = std::max(b.max_mu, mu);
      b.A_minus_I = std::max(b.A_minus_I, ratio(op_norm(A - Mat2::identity()), s));
      b.p_minus_1 = std::max(b.p_minus_1, ratio(std::abs(coef.p(x) - 1.0), s));
      b.mu_minus_1 = std::max(b.mu_minus_1, ratio(std::abs(mu - 1.0), s));
      b.beta_minus_x = std::max(b.beta_minus_x, ratio(norm(coef.beta(x) - x), t * s));
      b.grad_A = std::max(b.grad_A, ratio(coef.grad_A(x) * t, s));
      b.grad_mu = std::max(b.grad_mu, ratio(coef.grad_mu(x) * t, s));
      b.div_alpha = std::max(b.div_alpha, ratio(std::abs(coef.div_alpha(x) - mu / t) * t, s));
      b.dbeta = std::max(b.dbeta, ratio(coef.dbeta_minus_identity(x), s));
      b.div_beta = std::max(b.div_beta, ratio(std::abs(coef.div_beta(x) - 2.0), s));
    }
  return b;
}

ChartLimit chart_limit(const BoundaryChart& chart, int steps) {
  ChartLimit out;
  const CoefficientField coef(chart);
  for (int k = 1; k <= steps; ++k) {
    const double r = chart.radius * k / steps;
    const PolarRule rule = make_polar_rule(r, 16, 48);
    double det_dev = 0.0, mu_lo = 1.0, mu_hi = 1.0;
    for (const auto& node : rule.radial)
      for (double a : rule.angles) {
        const Vec2 x = polar(node.x, a);
        det_dev = std::max(det_dev, std::abs(coef.det(x) - 1.0));
        if (transformed_level(chart, x) > 0.0) {
          mu_lo = std::min(mu_lo, coef.mu(x));
          mu_hi = std::max(mu_hi, coef.mu(x));
        }
      }
    std::string failing;
    if (det_dev > 0.5) failing = "det bound";
    else if (mu_lo < 0.5 || mu_hi > 1.5) failing = "mu range";
    else if (r <= 0.5 * chart.radius) {
      const auto m = check_starshaped(chart, r, 200);
      if (m.A_margin < -1e-12) failing = "starshapedness";
    }
    if (!failing.empty()) {
      out.failing = failing;
      return out;
    }
    out.radius = r;
  }
  return out;
}

}  // namespace fblab
