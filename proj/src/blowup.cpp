#include "fblab/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "fblab/error.hpp"
#include "fblab/parallel.hpp"
#include "fblab/quadrature.hpp"

namespace fblab {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double degenerate_amplitude = 1e-8;

double pos(double t) { return t > 0.0 ? t : 0.0; }
double neg(double t) { return t < 0.0 ? -t : 0.0; }

Vec2 outward_normal(const Center& c) { return c.is_boundary() ? c.chart->outward_normal() : Vec2{}; }

std::function<bool(Vec2)> membership(const Center& c, double r) {
  if (!c.is_boundary()) return nullptr;
  if (c.inside) return c.inside;
  if (r > c.chart->radius) throw RangeError("blowup", "ball leaves the boundary chart and no domain was given");
  const BoundaryChart chart = *c.chart;
  return [chart](Vec2 y) {
    const Vec2 l = chart.to_local(y);
    return l.y > chart.graph(l.x);
  };
}

// Least squares data for a fixed shape: sum <V_i, Q_i> and sum ||Q_i||^2.
std::pair<double, double> projection(const RescaledField& v, const BlowupProfile& p) {
  double vq = 0.0, qq = 0.0;
  for (std::size_t m = 0; m < v.points.size(); ++m) {
    const double w = v.weights[m];
    for (int i : {p.j, p.k}) {
      if (i < 0) continue;
      const double q = p.shape(i, v.points[m]);
      vq += w * v.values[i][m] * q;
      qq += w * q * q;
    }
  }
  return {vq, qq};
}

// residual of the best amplitude for a shape, given the total norm
double shape_residual(const RescaledField& v, const BlowupProfile& p, double total, double& a) {
  const auto [vq, qq] = projection(v, p);
  a = qq > 0.0 ? pos(vq / qq) : 0.0;
  return total - 2.0 * a * vq + a * a * qq;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (y[k] > 0.0 && x[k] > 0.0) {
      lx.push_back(std::log(x[k]));
      ly.push_back(std::log(y[k]));
    }
  if (lx.size() < 2) return std::numeric_limits<double>::infinity();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::infinity();
}

}  // namespace

std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::deg1: return "deg1";
    case ProfileKind::deg2: return "deg2";
    case ProfileKind::interior_deg1: return "interior-deg1";
  }
  return "?";
}

double BlowupProfile::shape(int i, Vec2 x) const {
  if (i != j && i != k) return 0.0;
  switch (kind) {
    case ProfileKind::deg1: return i == j ? pos(-dot(x, normal)) : 0.0;
    case ProfileKind::deg2: {
      const double s = dot(x, e);
      return (i == j ? neg(s) : pos(s)) * pos(-dot(x, normal));
    }
    case ProfileKind::interior_deg1: {
      const double s = dot(x, e);
      return i == j ? pos(s) : neg(s);
    }
  }
  return 0.0;
}

double RescaledField::norm_sq() const {
  double s = 0.0;
  for (const auto& c : values)
    for (std::size_t m = 0; m < c.size(); ++m) s += weights[m] * c[m] * c[m];
  return s;
}

double RescaledField::trace_norm_sq() const {
  double s = 0.0;
  for (const auto& c : trace)
    for (double x : c) s += circle_weight * x * x;
  return s;
}

RescaledField rescale(const Field& u, const Center& c, double r, double gamma, const RescaleOptions& opt) {
  if (!(r > 0.0)) throw Error("blowup", "radius must be positive");
  const double h = opt.h > 0.0 ? opt.h : u.spacing();
  if (h > 0.0 && r < opt.min_radius_factor * h * (1.0 - 1e-12))
    throw Error("blowup", "radius below the resolved range of the grid");
  const auto inside = membership(c, r);
  const int N = u.components();
  const int n_r = std::max(opt.min_radial, h > 0.0 ? static_cast<int>(std::ceil(r / h)) : 0);
  const int n_theta = round_theta_count(std::max(opt.min_theta, h > 0.0 ? static_cast<int>(std::ceil(2 * pi * r / h)) : 0));
  // cell edges on the tangent and normal rays of boundary centers
  const Vec2 nu = outward_normal(c);
  const double theta0 = c.is_boundary() ? std::atan2(nu.y, nu.x) : 0.0;
  const PolarRule rule = make_polar_rule(1.0, n_r, n_theta, theta0);

  RescaledField v;
  v.r = r;
  v.gamma = gamma;
  for (const auto& node : rule.radial)
    for (double t : rule.angles) {
      v.points.push_back(polar(node.x, t));
      v.weights.push_back(node.w * rule.dtheta);
    }
  for (double t : rule.angles) v.circle.push_back(polar(1.0, t));
  v.circle_weight = rule.dtheta;

  const double scale = std::pow(r, -gamma);
  auto sample = [&](const std::vector<Vec2>& pts, std::vector<std::vector<double>>& out) {
    out.assign(N, std::vector<double>(pts.size(), 0.0));
    for (std::size_t m = 0; m < pts.size(); ++m) {
      const Vec2 y = c.x + r * pts[m];
      if (inside && !inside(y)) continue;
      if (!u.covers(y)) throw RangeError("blowup", "ball leaves the computational grid");
      for (int i = 0; i < N; ++i) out[i][m] = scale * u.value(i, y);
    }
  };
  sample(v.points, v.values);
  sample(v.circle, v.trace);
  return v;
}

double l2_gap(const RescaledField& v, const BlowupProfile& p) {
  double s = 0.0;
  for (int i = 0; i < v.components(); ++i)
    for (std::size_t m = 0; m < v.points.size(); ++m) {
      const double d = v.values[i][m] - p.value(i, v.points[m]);
      s += v.weights[m] * d * d;
    }
  return s;
}

double linf_gap(const RescaledField& v, const BlowupProfile& p) {
  double total = 0.0;
  for (int i = 0; i < v.components(); ++i) {
    double m = 0.0;
    for (std::size_t q = 0; q < v.points.size(); ++q) m = std::max(m, std::abs(v.values[i][q] - p.value(i, v.points[q])));
    for (std::size_t q = 0; q < v.circle.size(); ++q) m = std::max(m, std::abs(v.trace[i][q] - p.value(i, v.circle[q])));
    total += m;
  }
  return total;
}

double trace_gap(const RescaledField& a, const RescaledField& b) {
  if (a.circle.size() != b.circle.size() || a.components() != b.components())
    throw Error("blowup", "trace samples do not match");
  double s = 0.0;
  for (int i = 0; i < a.components(); ++i)
    for (std::size_t m = 0; m < a.circle.size(); ++m) {
      const double d = a.trace[i][m] - b.trace[i][m];
      s += a.circle_weight * d * d;
    }
  return s;
}

double best_amplitude(const RescaledField& v, const BlowupProfile& shape) {
  const auto [vq, qq] = projection(v, shape);
  return qq > 0.0 ? pos(vq / qq) : 0.0;
}

ProfileFit fit_profile(const RescaledField& v, Vec2 normal, ProfileKind kind) {
  const int N = v.components();
  const double total = v.norm_sq();
  BlowupProfile p;
  p.kind = kind;
  p.normal = normal;
  p.components = N;
  ProfileFit best;
  best.residual = std::numeric_limits<double>::infinity();
  auto consider = [&](const BlowupProfile& q) {
    double a;
    const double res = shape_residual(v, q, total, a);
    if (res < best.residual) {
      best.residual = res;
      best.profile = q;
      best.profile.a = a;
    }
  };
  switch (kind) {
    case ProfileKind::deg1:
      if (norm(normal) == 0.0) throw Error("blowup", "boundary profile needs a normal");
      for (p.j = 0; p.j < N; ++p.j) consider(p);
      break;
    case ProfileKind::deg2:
      if (norm(normal) == 0.0) throw Error("blowup", "boundary profile needs a normal");
      if (N < 2) throw Error("blowup", "degree-two profile needs two components");
      p.e = perp(normal);
      for (p.j = 0; p.j < N; ++p.j)
        for (p.k = 0; p.k < N; ++p.k)
          if (p.j != p.k) consider(p);
      break;
    case ProfileKind::interior_deg1: {
      if (N < 2) throw Error("blowup", "interior profile needs two components");
      constexpr int scan = 144;
      for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k) {
          p.j = j;
          p.k = k;
          auto objective = [&](double t) {
            BlowupProfile q = p;
            q.e = polar(1.0, t);
            double a;
            return shape_residual(v, q, total, a);
          };
          // coarse scan for the global basin, then a bracketed 1D refinement
          int arg = 0;
          double low = std::numeric_limits<double>::infinity();
          for (int s = 0; s < scan; ++s) {
            const double f = objective(2 * pi * s / scan);
            if (f < low) {
              low = f;
              arg = s;
            }
          }
          const double step = 2 * pi / scan;
          const auto [t, f] = boost::math::tools::brent_find_minima(objective, (arg - 1) * step, (arg + 1) * step, 40);
          BlowupProfile q = p;
          q.e = polar(1.0, f <= low ? t : arg * step);
          consider(q);
        }
      break;
    }
  }
  best.residual = std::max(0.0, best.residual);
  best.relative_residual = total > 0.0 ? best.residual / total : 0.0;
  best.degenerate = best.profile.a < degenerate_amplitude;
  return best;
}

std::string BlowupRate::csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "r,L2_gap,Linf_gap,dini_integral\n";
  for (const auto& s : samples) out << s.r << ',' << s.l2_gap << ',' << s.linf_gap << ',' << s.dini << '\n';
  return out.str();
}

BlowupRate blowup_rate(const Field& u, const Center& c, std::vector<double> radii, double gamma, const Modulus& sigma0,
                       const RescaleOptions& opt) {
  ProfileKind kind;
  if (std::abs(gamma - 1.0) < 1e-12) kind = c.is_boundary() ? ProfileKind::deg1 : ProfileKind::interior_deg1;
  else if (std::abs(gamma - 2.0) < 1e-12 && c.is_boundary()) kind = ProfileKind::deg2;
  else throw Error("blowup", "rates are only available for frequency 1, or 2 at boundary points");
  if (radii.empty()) throw Error("blowup", "no radii");
  std::sort(radii.begin(), radii.end());
  const std::size_t n = radii.size();
  // one polar rule for every radius, resolved for the largest one, so traces can be compared
  RescaleOptions shared = opt;
  const double h = opt.h > 0.0 ? opt.h : u.spacing();
  if (h > 0.0) {
    shared.min_theta = round_theta_count(std::max(opt.min_theta, static_cast<int>(std::ceil(2 * pi * radii.back() / h))));
    shared.min_radial = std::max(opt.min_radial, static_cast<int>(std::ceil(radii.back() / h)));
  }
  std::vector<RescaledField> v(n);
  parallel_for(n, [&](std::size_t m) { v[m] = rescale(u, c, radii[m], gamma, shared); });

  BlowupRate rate;
  const Vec2 nu = outward_normal(c);
  // the terminal profile is the fit at the smallest radius
  rate.profile = fit_profile(v.front(), nu, kind).profile;
  rate.samples.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    auto& s = rate.samples[m];
    s.r = radii[m];
    s.dini = dini_integral(sigma0, radii[m], 1).value;
    s.amplitude = best_amplitude(v[m], rate.profile);
  }

  rate.h_ref = std::pow(radii.back(), 2 * gamma) * v.back().trace_norm_sq();
  std::vector<double> rs, l2, linf;
  for (std::size_t m = 0; m < n; ++m) {
    auto& s = rate.samples[m];
    s.l2_gap = l2_gap(v[m], rate.profile);
    s.linf_gap = linf_gap(v[m], rate.profile);
    if (m > 0) s.cauchy = trace_gap(v[m], v[m - 1]);
    rs.push_back(s.r);
    l2.push_back(s.l2_gap);
    linf.push_back(s.linf_gap);
    if (rate.h_ref > 0.0 && s.dini > 0.0) rate.c_rate = std::max(rate.c_rate, s.l2_gap / (rate.h_ref * s.dini));
    if (m > 0 && rate.h_ref > 0.0) {
      const double dd = s.dini - rate.samples[m - 1].dini;
      if (dd > 0.0) rate.c_cauchy = std::max(rate.c_cauchy, s.cauchy / (rate.h_ref * dd));
    }
  }
  const double unit = std::pow(radii.back(), 2 * gamma);
  rate.c_rate_scaled = rate.c_rate * unit;
  rate.c_cauchy_scaled = rate.c_cauchy * unit;
  const double floor = 1e-24 * std::max(1.0, v.front().norm_sq());
  bool vanishing = true;
  for (double x : l2) vanishing = vanishing && x <= floor;
  rate.decay_exponent = vanishing ? std::numeric_limits<double>::infinity() : log_slope(rs, l2);
  rate.linf_exponent = vanishing ? std::numeric_limits<double>::infinity() : log_slope(rs, linf);
  rate.required_exponent = sigma0.kind() == ModulusKind::power ? sigma0.exponent() - 0.1
                                                                : -std::numeric_limits<double>::infinity();
  rate.ok = rate.decay_exponent >= rate.required_exponent;
  return rate;
}

double linfty_gap(const Field& u, const Center& c, double r, const RescaleOptions& opt) {
  if (!c.is_boundary()) throw Error("blowup", "the sup gap is defined at boundary points");
  const auto v = rescale(u, c, r, 1.0, opt);
  return linf_gap(v, fit_profile(v, outward_normal(c), ProfileKind::deg1).profile);
}

double linfty_bound(double l2_sq, double lip) {
  if (!(lip > 0.0) || l2_sq < 0.0) throw Error("blowup", "invalid bound arguments");
  // the squared norm is at least the integral of (M - lip |x - x*|)^+ squared = pi M^4 / (6 lip^2)
  return std::pow(6.0 * lip * lip * l2_sq / pi, 0.25);
}

AmplitudeConstants amplitude_constants(ProfileKind kind) {
  // integrals over the unit circle, parametrized by angle
  auto circle = [](auto f) {
    double s = 0.0;
    for (int q = 0; q < 4; ++q)
      s += integrate([&](double t) { return f(std::cos(t), std::sin(t)); }, q * pi / 2, (q + 1) * pi / 2);
    return s;
  };
  AmplitudeConstants k;
  switch (kind) {
    case ProfileKind::deg1:
      k.printed = 1.0 / std::sqrt(circle([](double, double y) { return pos(y); }));
      k.squared = 1.0 / std::sqrt(circle([](double, double y) { return pos(y) * pos(y); }));
      break;
    case ProfileKind::deg2:
      k.printed = 2.0 / std::sqrt(circle([](double x, double y) { return pos(x) * pos(y); }));
      k.squared = 1.0 / std::sqrt(circle([](double x, double y) { return x * x * pos(y) * pos(y); }));
      break;
    case ProfileKind::interior_deg1:
      k.squared = 1.0 / std::sqrt(circle([](double x, double) { return x * x; }));
      k.printed = k.squared;
      break;
  }
  return k;
}

}  // namespace fblab
