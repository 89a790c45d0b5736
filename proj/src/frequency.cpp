#include "fblab/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fblab/error.hpp"
#include "fblab/parallel.hpp"
#include "fblab/quadrature.hpp"

namespace fblab {

namespace {

constexpr double pi = std::numbers::pi;

// Local coordinates: boundary centers use the chart frame (domain roughly on the side of the
// second axis), interior centers use world axes.
struct LocalMap {
  const Center& c;

  bool inside(Vec2 x) const {
    if (!c.is_boundary()) return true;
    if (c.straighten) return transformed_level(*c.chart, x) > 0.0;
    return c.inside(c.chart->to_world(x));
  }
  Vec2 world(Vec2 x) const {
    if (!c.is_boundary()) return c.x + x;
    return c.straighten ? psi_world(*c.chart, x) : c.chart->to_world(x);
  }
};

// Angular interval of the ring of radius rho inside the region; interior centers get the
// whole circle.
std::pair<double, double> angular_interval(const LocalMap& m, double rho) {
  if (!m.c.is_boundary()) return {0.0, 2.0 * pi};
  auto in = [&](double t) { return m.inside(polar(rho, t)); };
  if (!in(0.5 * pi) || in(-0.5 * pi)) throw Error("frequency", "ring does not cross the boundary once on each side");
  double lo = -0.5 * pi, hi = 0.5 * pi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (in(mid) ? hi : lo) = mid;
  }
  const double a = 0.5 * (lo + hi);
  lo = 0.5 * pi;
  hi = 1.5 * pi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (in(mid) ? lo : hi) = mid;
  }
  return {a, 0.5 * (lo + hi)};
}

struct PointData {
  Mat2 A;
  double p = 1.0;
  double mu = 1.0;
};

PointData coefficients_at(const Center& c, Vec2 x) {
  PointData d;
  if (c.is_boundary() && c.straighten) {
    const Mat2 J = psi_jacobian(*c.chart, x);
    const Mat2 Ji = J.inverse();
    d.p = J.det();
    d.A = d.p * (Ji * Ji.transpose());
    const double r2 = dot(x, x);
    d.mu = r2 > 0.0 ? dot(d.A * x, x) / r2 : 1.0;
  }
  return d;
}

// gradient of v = u o map in local coordinates
Vec2 local_gradient(const Center& c, Vec2 x, Vec2 world_grad) {
  if (!c.is_boundary()) return world_grad;
  const Vec2 g = c.chart->frame.transpose() * world_grad;
  if (!c.straighten) return g;
  return psi_jacobian(*c.chart, x).transpose() * g;
}

int theta_count(double r, const Sampling& s, double h) {
  int n = s.min_theta;
  if (h > 0.0) n = std::max(n, static_cast<int>(std::ceil(2.0 * pi * r / h)));
  return n;
}

}  // namespace

Center Center::boundary_plain(const BoundaryChart& chart, const Domain& domain) {
  return {chart.origin, chart, false, [domain](Vec2 y) { return domain.contains(y); }};
}

double RingTerms::energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i < dirichlet.size(); ++i) e += dirichlet[i] - potential[i];
  return e;
}

double RingTerms::total_height() const {
  double s = 0.0;
  for (double x : height) s += x;
  return s;
}

RingTerms ring_terms(const Field& u, const Center& c, double r, Sampling s) {
  if (!(r > 0.0)) throw Error("frequency", "radius must be positive");
  const int N = u.components();
  const double h = s.h > 0.0 ? s.h : u.spacing();
  const LocalMap map{c};
  RingTerms t;
  t.dirichlet.assign(N, 0.0);
  t.potential.assign(N, 0.0);
  t.height.assign(N, 0.0);
  const int n_r = std::max(s.min_radial, h > 0.0 ? static_cast<int>(std::ceil(r / h)) : 0);
  const auto radial = gauss_legendre(0.0, r, std::max(2, (n_r + 15) / 16));
  const int n_theta = theta_count(r, s, h);
  auto ring = [&](double rho, double weight, bool surface) {
    const auto [a, b] = angular_interval(map, rho);
    // an even count puts a cell edge, not a node, on the symmetry ray of a boundary interval;
    // full circles get edges on multiples of pi/12
    int n = std::max(16, static_cast<int>(std::ceil(n_theta * (b - a) / (2.0 * pi))));
    n = c.is_boundary() ? n + n % 2 : round_theta_count(n);
    const double dt = (b - a) / n;
    for (int k = 0; k < n; ++k) {
      const Vec2 x = polar(rho, a + (k + 0.5) * dt);
      const Vec2 y = map.world(x);
      if (!u.covers(y)) throw RangeError("frequency", "ring leaves the computational grid");
      const PointData pd = coefficients_at(c, x);
      for (int i = 0; i < N; ++i) {
        const double v = u.value(i, y);
        if (surface) {
          t.height[i] += weight * dt * v * v * pd.mu;
          continue;
        }
        if (v == 0.0) continue;
        const Vec2 g = local_gradient(c, x, u.gradient(i, y));
        t.dirichlet[i] += weight * dt * dot(pd.A * g, g);
        t.potential[i] += weight * dt * u.lambda(i) * pd.p * v * v;
      }
    }
  };
  for (const auto& node : radial) ring(node.x, node.w * node.x, false);
  ring(r, r, true);
  // d = 2: the volume terms carry r^0 and the surface term 1/r
  for (double& x : t.height) x /= r;
  return t;
}

double height(const Field& u, const Center& c, double r, Sampling s) { return ring_terms(u, c, r, s).total_height(); }

double energy(const Field& u, const Center& c, double r, Sampling s) { return ring_terms(u, c, r, s).energy(); }

double weiss(const Field& u, const Center& c, double r, double gamma, Sampling s) {
  const RingTerms t = ring_terms(u, c, r, s);
  const double H = t.total_height();
  if (!(H > 0.0)) throw Error("frequency", "Weiss energy with vanishing height");
  return (t.energy() - gamma * H) / std::pow(r, 2.0 * gamma);
}

std::string to_string(PointClass c) {
  switch (c) {
    case PointClass::Z1: return "Z1";
    case PointClass::Z2: return "Z2";
    case PointClass::S: return "S";
    default: return "unknown";
  }
}

PointClass classify_boundary_point(double gamma, double delta, double tol) {
  if (std::abs(gamma - 1.0) <= tol) return PointClass::Z1;
  if (std::abs(gamma - 2.0) <= tol) return PointClass::Z2;
  if (gamma >= 2.0 + delta - tol) return PointClass::S;
  return PointClass::unknown;
}

double corrected_frequency(const RadiusSample& s, double C) { return std::exp(C * s.dini) * (s.N + 1.0); }

std::vector<const RadiusSample*> FrequencyProfile::reliable() const {
  std::vector<const RadiusSample*> out;
  for (const auto& s : samples)
    if (s.reliable) out.push_back(&s);
  return out;
}

std::string FrequencyProfile::csv() const {
  std::ostringstream out;
  out.precision(12);
  out << "r,E,H,N";
  const std::size_t ng = samples.empty() ? 0 : samples.front().weiss.size();
  for (std::size_t g = 0; g < ng; ++g) {
    std::ostringstream name;
    name << "W" << (g < weiss_gammas.size() ? weiss_gammas[g] : static_cast<double>(g + 1));
    out << "," << name.str();
  }
  out << "\n";
  for (const auto& s : samples) {
    out << s.r << "," << s.E << "," << s.H << "," << s.N;
    for (double w : s.weiss) out << "," << w;
    out << "\n";
  }
  return out.str();
}

namespace {

double worst_drop(const std::vector<const RadiusSample*>& rs, double C) {
  double worst = 0.0;
  for (std::size_t k = 1; k < rs.size(); ++k) {
    const double a = corrected_frequency(*rs[k - 1], C), b = corrected_frequency(*rs[k], C);
    if (a > 0.0) worst = std::max(worst, 1.0 - b / a);
  }
  return worst;
}

}  // namespace

FrequencyProfile frequency_profile(const Field& u, const Center& c, const std::vector<double>& radii,
                                   const ProfileOptions& opt) {
  if (!std::is_sorted(radii.begin(), radii.end())) throw Error("frequency", "radii must be sorted");
  FrequencyProfile p;
  p.weiss_gammas = opt.weiss_gammas;
  p.center = c;
  p.samples.resize(radii.size());
  const double h = opt.sampling.h > 0.0 ? opt.sampling.h : u.spacing();
  parallel_for(radii.size(), [&](std::size_t k) {
    RadiusSample& s = p.samples[k];
    s.r = radii[k];
    s.terms = ring_terms(u, c, s.r, opt.sampling);
    s.E = s.terms.energy();
    s.H = s.terms.total_height();
    s.N = s.H > 0.0 ? s.E / s.H : std::numeric_limits<double>::quiet_NaN();
    for (double g : opt.weiss_gammas)
      s.weiss.push_back(s.H > 0.0 ? (s.E - g * s.H) / std::pow(s.r, 2.0 * g) : std::numeric_limits<double>::quiet_NaN());
    s.reliable = s.H > 0.0 && s.r >= opt.reliable_factor * h;
    if (c.is_boundary() && !c.chart->sigma.is_zero()) {
      const DiniValue dv = dini_integral(c.chart->sigma, s.r, 1);
      s.dini = dv.divergent ? std::numeric_limits<double>::infinity() : dv.value;
    }
  });
  for (const auto& s : p.samples)
    if (std::isfinite(s.N)) p.max_frequency = std::max(p.max_frequency, s.N);
  const auto rs = p.reliable();
  p.monotonicity_violation = worst_drop(rs, opt.correction);
  if (rs.size() >= 4) {
    // intercept of the least-squares line through (r, corrected - 1)
    double sr = 0.0, sq = 0.0, srr = 0.0, srq = 0.0;
    for (const auto* s : rs) {
      const double q = corrected_frequency(*s, opt.correction) - 1.0;
      sr += s->r;
      sq += q;
      srr += s->r * s->r;
      srq += s->r * q;
    }
    const double n = static_cast<double>(rs.size());
    const double slope = (n * srq - sr * sq) / (n * srr - sr * sr);
    p.gamma_estimate = (sq - slope * sr) / n;
    p.estimated = true;
  }
  return p;
}

std::pair<double, double> fit_almgren_constant(const std::vector<const FrequencyProfile*>& profiles, double tol,
                                               double c_max) {
  auto worst = [&](double C) {
    double w = 0.0;
    for (const auto* p : profiles) w = std::max(w, worst_drop(p->reliable(), C));
    return w;
  };
  if (worst(0.0) <= tol) return {0.0, worst(0.0)};
  if (worst(c_max) > tol) return {c_max, worst(c_max)};
  double lo = 0.0, hi = c_max;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (worst(mid) <= tol ? hi : lo) = mid;
  }
  return {hi, worst(hi)};
}

HGrowth check_H_growth(const FrequencyProfile& p, double gamma, int min_radii) {
  HGrowth g;
  const auto rs = p.reliable();
  if (static_cast<int>(rs.size()) < min_radii) return g;
  g.valid = true;
  const std::size_t n = rs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto* s : rs) {
    const double x = std::log(s->r), y = std::log(s->H);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  g.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const RadiusSample& last = *rs.back();
  double tx = 0, ty = 0, txx = 0, txy = 0;
  for (const auto* s : rs) {
    g.c_fit = std::max(g.c_fit, s->H / (last.H * std::pow(s->r / last.r, 2.0 * gamma)));
    const double y = s->H / std::pow(s->r, 2.0 * gamma);
    tx += s->r;
    ty += y;
    txx += s->r * s->r;
    txy += s->r * y;
  }
  const double slope = (n * txy - tx * ty) / (n * txx - tx * tx);
  g.h_limit = (ty - slope * tx) / n;
  return g;
}

double height_derivative_constant(const FrequencyProfile& p) {
  const auto rs = p.reliable();
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < rs.size(); ++k) {
    const double r0 = rs[k - 1]->r, r1 = rs[k]->r, r2 = rs[k + 1]->r;
    const double H0 = rs[k - 1]->H, H1 = rs[k]->H, H2 = rs[k + 1]->H;
    // derivative of the quadratic through the three samples, at r1
    const double d = H0 * (r1 - r2) / ((r0 - r1) * (r0 - r2)) + H1 * (2 * r1 - r0 - r2) / ((r1 - r0) * (r1 - r2)) +
                     H2 * (r1 - r0) / ((r2 - r0) * (r2 - r1));
    const double defect = std::abs(d - 2.0 * rs[k]->E / r1) * r1 / H1;
    const double sigma = p.center.is_boundary() ? p.center.chart->sigma(r1) : 0.0;
    worst = std::max(worst, sigma > 0.0 ? defect / sigma : defect);
  }
  return worst;
}

double coercivity_ratio(const FrequencyProfile& p) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto* s : p.reliable())
    for (std::size_t i = 0; i < s->terms.height.size(); ++i) {
      const double D = s->terms.dirichlet[i], H = s->terms.height[i];
      if (D + H > 0.0) worst = std::min(worst, (D - s->terms.potential[i] + H) / (0.5 * (D + H)));
    }
  return worst;
}

double weiss_constant(const FrequencyProfile& p, std::size_t gamma_index) {
  const auto rs = p.reliable();
  if (rs.empty()) return 0.0;
  const double Hmax = rs.back()->H;
  double C = 0.0;
  for (std::size_t k = 1; k < rs.size(); ++k) {
    const double drop = rs[k - 1]->weiss.at(gamma_index) - rs[k]->weiss.at(gamma_index);
    if (drop <= 0.0) continue;
    const double growth = Hmax * (rs[k]->dini - rs[k - 1]->dini);
    C = std::max(C, growth > 0.0 ? drop / growth : std::numeric_limits<double>::infinity());
  }
  return C;
}

double straightening_radius(double chart_radius, double lambda_sum, int d) {
  return std::min(0.5 * chart_radius, std::sqrt((d - 1) / (6.0 * lambda_sum)));
}

}  // namespace fblab
