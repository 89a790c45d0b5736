#include "fblab/epiperimetric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fblab/error.hpp"
#include "fblab/quadrature.hpp"

namespace fblab {

namespace {

constexpr double pi = std::numbers::pi;

void require_positive_denominator(int d, double gamma) {
  if (d + 2.0 * gamma - 2.0 <= 0.0) throw Error("epiperimetric", "d + 2 gamma - 2 must be positive");
}

double arc_length(Setting s) { return s == Setting::half ? pi : 2.0 * pi; }

// Values of the degree-j basis functions at t: first the a-mode, then the b-mode (full only).
struct ModeValue {
  double a = 0.0, da = 0.0, b = 0.0, db = 0.0;
};

ModeValue mode(Setting s, int j, double t) {
  ModeValue m;
  if (s == Setting::half) {
    const double c = std::sqrt(2.0 / pi);
    m.a = c * std::sin(j * t);
    m.da = c * j * std::cos(j * t);
    return m;
  }
  if (j == 0) {
    m.a = 1.0 / std::sqrt(2.0 * pi);
    return m;
  }
  const double c = 1.0 / std::sqrt(pi);
  m.a = c * std::cos(j * t);
  m.da = -c * j * std::sin(j * t);
  m.b = c * std::sin(j * t);
  m.db = c * j * std::cos(j * t);
  return m;
}

double coef(const std::vector<double>& v, int j) { return j < static_cast<int>(v.size()) ? v[j] : 0.0; }

// Series sum_j c_j(r) phi_j(t) and its angular derivative.
template <class Radial>
std::pair<double, double> series(const SphericalTrace& f, double t, Radial radial) {
  double v = 0.0, dv = 0.0;
  const int n = f.max_degree();
  for (int j = 0; j <= n; ++j) {
    const double aj = coef(f.a, j), bj = coef(f.b, j);
    if (aj == 0.0 && bj == 0.0) continue;
    const double w = radial(j);
    const ModeValue m = mode(f.setting, j, t);
    v += w * (aj * m.a + bj * m.b);
    dv += w * (aj * m.da + bj * m.db);
  }
  return {v, dv};
}

std::vector<double> radial_cuts(std::vector<double> breaks) {
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [](double b) { return b <= 0.0 || b >= 1.0; }),
               breaks.end());
  breaks.push_back(0.0);
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return breaks;
}

std::vector<Node1D> radial_nodes(const PolarField& w, int panels) {
  const auto cuts = radial_cuts(w.breaks);
  std::vector<Node1D> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    auto piece = gauss_legendre(cuts[k], cuts[k + 1], panels);
    out.insert(out.end(), piece.begin(), piece.end());
  }
  return out;
}

std::vector<double> midpoints(Setting s, int n) {
  std::vector<double> t(n);
  const double dt = arc_length(s) / n;
  for (int k = 0; k < n; ++k) t[k] = (k + 0.5) * dt;
  return t;
}

double gauss_on_arcs(const std::vector<std::pair<double, double>>& arcs, int panels,
                     const std::function<double(double)>& g) {
  double sum = 0.0;
  for (const auto& [lo, hi] : arcs)
    for (const auto& n : gauss_legendre(lo, hi, panels)) sum += n.w * g(n.x);
  return sum;
}

// (I1 - gamma^2/(d+2gamma-2), I2 - 1/(d+2gamma-2)) for the truncation profile.
std::pair<double, double> truncation_excess(int d, double gamma, double rho, double tau) {
  const double den = d + 2.0 * gamma - 2.0;
  if (d == 2) {
    // I1 = tau/2 + tau^2 rho / ((1-rho)(2tau-1)); I2 = 1/(2tau) - c J with c = rho/(1-rho).
    const double e1 = 0.5 * (tau - gamma) + tau * tau * rho / ((1.0 - rho) * (2.0 * tau - 1.0));
    const double c = rho / (1.0 - rho);
    double J = 0.0;
    if (c > 0.0) J = integrate([&](double s) { return std::pow(s, 2.0 * tau - 1.0) / (s + c); }, 0.0, 1.0, 1e-14);
    const double e2 = -(tau - gamma) / (2.0 * tau * gamma) - c * J;
    return {e1, e2};
  }
  const auto [i1, i2] = truncation_radial_integrals(d, rho, tau);
  return {i1 - gamma * gamma / den, i2 - 1.0 / den};
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

int SphericalTrace::max_degree() const {
  return static_cast<int>(std::max(a.size(), b.size())) - 1;
}

double SphericalTrace::mass(int j) const {
  const double x = coef(a, j), y = coef(b, j);
  return x * x + y * y;
}

double SphericalTrace::l2() const {
  double s = 0.0;
  for (int j = 0; j <= max_degree(); ++j) s += mass(j);
  return s;
}

double SphericalTrace::dirichlet() const {
  double s = 0.0;
  for (int j = 0; j <= max_degree(); ++j) s += j * (j + d - 2.0) * mass(j);
  return s;
}

double SphericalTrace::value(double t) const {
  return series(*this, t, [](int) { return 1.0; }).first;
}

double SphericalTrace::derivative(double t) const {
  return series(*this, t, [](int) { return 1.0; }).second;
}

SphericalTrace make_trace(Setting setting, std::vector<double> a, std::vector<double> b, int d) {
  SphericalTrace f;
  f.d = d;
  f.setting = setting;
  f.a = std::move(a);
  f.b = std::move(b);
  if (setting == Setting::half && !f.a.empty()) f.a[0] = 0.0;
  return f;
}

SphericalTrace fourier_decompose(const std::vector<double>& samples, Setting setting, int j_max) {
  SphericalTrace f;
  f.setting = setting;
  f.samples = samples;
  if (setting == Setting::half) {
    const int n = static_cast<int>(samples.size()) - 1;
    if (n < 256) throw Error("epiperimetric", "fourier_decompose needs at least 256 uniform nodes");
    if (std::abs(samples.front()) > 1e-6 || std::abs(samples.back()) > 1e-6)
      throw Error("epiperimetric", "half-circle trace does not vanish at the arc endpoints");
    j_max = std::min(j_max, n - 1);
    const double h = pi / n;
    f.a.assign(j_max + 1, 0.0);
    double norm = 0.0;
    for (int k = 1; k < n; ++k) norm += h * samples[k] * samples[k];
    for (int j = 1; j <= j_max; ++j) {
      double s = 0.0;
      for (int k = 1; k < n; ++k) s += samples[k] * std::sin(j * k * h);
      f.a[j] = h * std::sqrt(2.0 / pi) * s;
    }
    f.tail = std::max(0.0, norm - f.l2());
    return f;
  }
  const int n = static_cast<int>(samples.size());
  if (n < 256) throw Error("epiperimetric", "fourier_decompose needs at least 256 uniform nodes");
  j_max = std::min(j_max, n / 2 - 1);
  const double h = 2.0 * pi / n;
  f.a.assign(j_max + 1, 0.0);
  f.b.assign(j_max + 1, 0.0);
  double norm = 0.0;
  for (int k = 0; k < n; ++k) norm += h * samples[k] * samples[k];
  for (int j = 0; j <= j_max; ++j) {
    double sa = 0.0, sb = 0.0;
    for (int k = 0; k < n; ++k) {
      const ModeValue m = mode(setting, j, k * h);
      sa += samples[k] * m.a;
      sb += samples[k] * m.b;
    }
    f.a[j] = h * sa;
    f.b[j] = h * sb;
  }
  f.tail = std::max(0.0, norm - f.l2());
  return f;
}

double weiss_homogeneous(int d, double gamma, const SphericalTrace& f) {
  require_positive_denominator(d, gamma);
  double s = 0.0;
  for (int j = 0; j <= f.max_degree(); ++j)
    s += f.mass(j) * (j * (d + j - 2.0) - gamma * (d + gamma - 2.0));
  return s / (d + 2.0 * gamma - 2.0);
}

double weiss_homogeneous(int d, double gamma, double l2, double dirichlet) {
  require_positive_denominator(d, gamma);
  return (dirichlet - gamma * (d + gamma - 2.0) * l2) / (d + 2.0 * gamma - 2.0);
}

double weiss_harmonic_extension(int d, double gamma, const SphericalTrace& f) {
  require_positive_denominator(d, gamma);
  double s = 0.0;
  for (int j = 0; j <= f.max_degree(); ++j) s += f.mass(j) * (j - gamma);
  return s;
}

double eps1(int d, double gamma) { return (std::floor(gamma + 1.0) - gamma) / (d + 2.0 * gamma - 1.0); }

GainCheck gain_harmonic_check(int d, double gamma, const SphericalTrace& f, double eps) {
  GainCheck g;
  g.lhs = weiss_harmonic_extension(d, gamma, f) - (1.0 - eps) * weiss_homogeneous(d, gamma, f);
  const double den = d + 2.0 * gamma - 2.0;
  for (int j = 0; j <= f.max_degree(); ++j) {
    const double k = j - gamma;
    g.rhs += f.mass(j) * k / den * (eps * (d + gamma + j - 2.0) - k);
  }
  g.eps1 = eps1(d, gamma);
  return g;
}

PolarField homogeneous_field(const SphericalTrace& f, double gamma) {
  PolarField w;
  w.value = [f, gamma](double r, double t) { return std::pow(r, gamma) * f.value(t); };
  w.dr = [f, gamma](double r, double t) { return gamma * std::pow(r, gamma - 1.0) * f.value(t); };
  w.dt = [f, gamma](double r, double t) { return std::pow(r, gamma) * f.derivative(t); };
  return w;
}

PolarField harmonic_field(const SphericalTrace& f) {
  PolarField w;
  w.value = [f](double r, double t) { return series(f, t, [r](int j) { return std::pow(r, j); }).first; };
  w.dr = [f](double r, double t) {
    return series(f, t, [r](int j) { return j == 0 ? 0.0 : j * std::pow(r, j - 1); }).first;
  };
  w.dt = [f](double r, double t) { return series(f, t, [r](int j) { return std::pow(r, j); }).second; };
  return w;
}

PolarField truncated_field(const SphericalTrace& f, double rho, double tau) {
  auto g = [rho, tau](double r) { return r <= rho ? 0.0 : std::pow((r - rho) / (1.0 - rho), tau); };
  auto dg = [rho, tau](double r) {
    return r <= rho ? 0.0 : tau * std::pow((r - rho) / (1.0 - rho), tau - 1.0) / (1.0 - rho);
  };
  PolarField w;
  w.value = [f, g](double r, double t) { return g(r) * f.value(t); };
  w.dr = [f, dg](double r, double t) { return dg(r) * f.value(t); };
  w.dt = [f, g](double r, double t) { return g(r) * f.derivative(t); };
  w.breaks = {rho};
  return w;
}

PolarField rescaled_field(const PolarField& w, double gamma, double rho) {
  const double s = std::pow(rho, gamma);
  PolarField out;
  out.value = [w, gamma, rho, s](double r, double t) {
    return r < rho ? s * w.value(r / rho, t) : std::pow(r, gamma) * w.value(1.0, t);
  };
  out.dr = [w, gamma, rho, s](double r, double t) {
    return r < rho ? s / rho * w.dr(r / rho, t) : gamma * std::pow(r, gamma - 1.0) * w.value(1.0, t);
  };
  out.dt = [w, gamma, rho, s](double r, double t) {
    return r < rho ? s * w.dt(r / rho, t) : std::pow(r, gamma) * w.dt(1.0, t);
  };
  out.breaks = {rho};
  for (double b : w.breaks) out.breaks.push_back(b * rho);
  return out;
}

PolarField rescaled_field_literal(const PolarField& w, double gamma, double rho) {
  PolarField out = rescaled_field(w, gamma, rho);
  out.value = [w, gamma, rho](double r, double t) {
    return r < rho ? std::pow(r, gamma) * w.value(r / rho, t) : std::pow(r, gamma) * w.value(1.0, t);
  };
  out.dr = [w, gamma, rho](double r, double t) {
    if (r < rho)
      return gamma * std::pow(r, gamma - 1.0) * w.value(r / rho, t) + std::pow(r, gamma) / rho * w.dr(r / rho, t);
    return gamma * std::pow(r, gamma - 1.0) * w.value(1.0, t);
  };
  out.dt = [w, gamma, rho](double r, double t) {
    return r < rho ? std::pow(r, gamma) * w.dt(r / rho, t) : std::pow(r, gamma) * w.dt(1.0, t);
  };
  return out;
}

double weiss_quadrature(const PolarField& w, double gamma, Setting setting, PolarQuadrature q) {
  const auto rs = radial_nodes(w, q.radial_panels);
  const auto ts = midpoints(setting, q.n_theta);
  const double dt = arc_length(setting) / q.n_theta;
  double bulk = 0.0, edge = 0.0;
  for (double t : ts) {
    for (const auto& n : rs) {
      const double a = w.dr(n.x, t), b = w.dt(n.x, t);
      bulk += n.w * (a * a * n.x + b * b / n.x);
    }
    const double v = w.value(1.0, t);
    edge += v * v;
  }
  return dt * (bulk - gamma * edge);
}

Slicing slicing_decomposition(const PolarField& w, double gamma, Setting setting, PolarQuadrature q) {
  const auto rs = radial_nodes(w, q.radial_panels);
  const auto ts = midpoints(setting, q.n_theta);
  const double dt = arc_length(setting) / q.n_theta;
  Slicing s;
  for (double t : ts) {
    for (const auto& n : rs) {
      const double r = n.x;
      const double v = w.value(r, t), vr = w.dr(r, t), vt = w.dt(r, t);
      // phi_r = r^-gamma w in d = 2: r^(2gamma-1) F(phi_r) = (w_t^2 - gamma^2 w^2) / r and
      // r^(2gamma+1) |d_r phi_r|^2 = r (w_r - gamma w / r)^2.
      s.angular += n.w * (vt * vt - gamma * gamma * v * v) / r;
      const double k = vr - gamma * v / r;
      s.radial += n.w * r * k * k;
    }
  }
  s.angular *= dt;
  s.radial *= dt;
  s.total = s.angular + s.radial;
  s.direct = weiss_quadrature(w, gamma, setting, q);
  return s;
}

std::pair<double, double> truncation_radial_integrals(int d, double rho, double tau) {
  if (!(rho >= 0.0 && rho < 1.0) || tau < 1.0) throw Error("epiperimetric", "truncation needs rho in [0,1) and tau >= 1");
  double first = 0.0;
  for (int k = 0; k <= d - 1; ++k)
    first += binomial(d - 1, k) * std::pow(rho, d - 1 - k) * std::pow(1.0 - rho, k) / (2.0 * tau - 1.0 + k);
  first *= tau * tau / (1.0 - rho);
  double second = 0.0;
  if (d >= 3) {
    for (int k = 0; k <= d - 3; ++k)
      second += binomial(d - 3, k) * std::pow(rho, d - 3 - k) * std::pow(1.0 - rho, k) / (2.0 * tau + 1.0 + k);
    second *= 1.0 - rho;
  } else {
    const double c = rho / (1.0 - rho);
    const double J =
        c > 0.0 ? integrate([&](double s) { return std::pow(s, 2.0 * tau - 1.0) / (s + c); }, 0.0, 1.0, 1e-14) : 0.0;
    second = 1.0 / (2.0 * tau) - c * J;
  }
  return {first, second};
}

double truncation_gain(int d, double gamma, double rho, double tau, double l2, double dirichlet) {
  require_positive_denominator(d, gamma);
  const auto [e1, e2] = truncation_excess(d, gamma, rho, tau);
  return l2 * e1 + dirichlet * e2;
}

HighModeParameters high_mode_parameters(int d, double gamma, double ell) {
  if (ell <= 0.0) throw Error("epiperimetric", "high-mode gap must be positive");
  const double K = 2.0 + (d + 2.0 * gamma - 2.0) * (1.0 + gamma * gamma) / ell;
  const double scale = std::pow(2.0, 2.0 * gamma + 1.0) * K * (d + 2.0 * gamma - 1.0);
  // Dividing the condition by a leaves sqrt(a) * scale <= 1, monotone in a.
  auto ok = [&](double log_a) { return std::exp(0.5 * log_a) * scale <= 1.0; };
  double lo = std::log(1e-300), hi = std::log(0.5);
  HighModeParameters p;
  if (ok(hi)) {
    p.a = 0.5;
  } else {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    p.a = std::exp(lo);
  }
  p.rho = std::pow(p.a, 1.5);
  p.eps2 = p.a / (d + 2.0 * gamma - 1.0);
  return p;
}

TruncationResult truncation_competitor(const SphericalTrace& f, int d, double gamma, double ell) {
  require_positive_denominator(d, gamma);
  const double A = f.l2(), B = f.dirichlet();
  const double lowest = gamma * (d + gamma - 2.0);
  if ((lowest + ell) * A > B * (1.0 + 1e-12))
    throw Error("epiperimetric", "high-mode hypothesis fails: (gamma(d+gamma-2)+ell) |f|^2 > |grad f|^2");
  if (B - lowest * A <= 0.0) throw Error("epiperimetric", "F_gamma(f) <= 0: truncation lemma does not apply");
  TruncationResult out;
  out.params = high_mode_parameters(d, gamma, ell);
  out.weiss_homogeneous = weiss_homogeneous(d, gamma, A, B);
  out.difference = truncation_gain(d, gamma, out.params.rho, gamma + out.params.a, A, B);
  out.weiss_truncated = out.weiss_homogeneous + out.difference;
  if (out.difference > -out.params.eps2 * out.weiss_homogeneous)
    throw Error("epiperimetric", "truncated competitor misses the (1 - eps2) bound");
  out.competitor = truncated_field(f, out.params.rho, gamma + out.params.a);
  return out;
}

RescalingCheck rescaling_identity_check(const PolarField& w, const SphericalTrace& f, double gamma, double rho,
                                        Setting setting, PolarQuadrature q) {
  const double wz = weiss_quadrature(homogeneous_field(f, gamma), gamma, setting, q);
  const double ww = weiss_quadrature(w, gamma, setting, q);
  const double wr = weiss_quadrature(rescaled_field(w, gamma, rho), gamma, setting, q);
  return {wr - wz, std::pow(rho, 2.0 * gamma) * (ww - wz)};
}

double TraceComponent::l2() const {
  return gauss_on_arcs(support, 32, [this](double t) {
    const double v = value(t);
    return v * v;
  });
}

double TraceComponent::dirichlet() const {
  return gauss_on_arcs(support, 32, [this](double t) {
    const double v = derivative(t);
    return v * v;
  });
}

SphericalTrace TraceComponent::coefficients(Setting setting, int j_max) const {
  SphericalTrace f;
  f.setting = setting;
  f.a.assign(j_max + 1, 0.0);
  if (setting == Setting::full) f.b.assign(j_max + 1, 0.0);
  const int panels = std::max(32, j_max);
  for (const auto& [lo, hi] : support) {
    for (const auto& n : gauss_legendre(lo, hi, panels)) {
      const double v = n.w * value(n.x);
      for (int j = 0; j <= j_max; ++j) {
        const ModeValue m = mode(setting, j, n.x);
        f.a[j] += v * m.a;
        if (setting == Setting::full) f.b[j] += v * m.b;
      }
    }
  }
  f.tail = std::max(0.0, l2() - f.l2());
  return f;
}

double SegregatedTrace::max_overlap(int samples) const {
  double worst = 0.0;
  const double L = arc_length(setting);
  for (int k = 0; k < samples; ++k) {
    const double t = (k + 0.5) * L / samples;
    for (std::size_t i = 0; i < components.size(); ++i)
      for (std::size_t j = i + 1; j < components.size(); ++j)
        worst = std::max(worst, std::abs(components[i].value(t) * components[j].value(t)));
  }
  return worst;
}

TraceComponent arc_profile(double lo, double hi, double amplitude, std::vector<double> beta) {
  const double L = hi - lo;
  auto expo = [beta](double s) {
    double e = 0.0, de = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k) {
      const double w = (k + 1) * pi;
      e += beta[k] * std::cos(w * s);
      de -= beta[k] * w * std::sin(w * s);
    }
    return std::pair{std::exp(e), de};
  };
  TraceComponent c;
  c.support = {{lo, hi}};
  c.value = [=](double t) {
    if (t <= lo || t >= hi) return 0.0;
    const double s = (t - lo) / L;
    return amplitude * std::sin(pi * s) * expo(s).first;
  };
  c.derivative = [=](double t) {
    if (t <= lo || t >= hi) return 0.0;
    const double s = (t - lo) / L;
    const auto [e, de] = expo(s);
    return amplitude * e * (pi * std::cos(pi * s) + std::sin(pi * s) * de) / L;
  };
  return c;
}

EpiCompetitor build_epi_competitor(const SegregatedTrace& z, double gamma, int j_max) {
  constexpr int d = 2;
  EpiCompetitor out;
  out.gamma = gamma;
  out.setting = z.setting;
  if (z.setting == Setting::half && (gamma < 1.0 || gamma > 2.0))
    throw Error("epiperimetric", "boundary competitor needs gamma in [1, 2]");
  if (z.setting == Setting::full && gamma != 1.0) throw Error("epiperimetric", "interior competitor needs gamma = 1");

  const EpiConstants k = certified_constants(d);
  out.eps_certified = z.setting == Setting::half ? k.eps_bd : k.eps_int;
  out.eps_printed = z.setting == Setting::half ? k.eps_bd_printed : k.eps_int;
  const double threshold = z.setting == Setting::half ? 2.0 * d + k.ell0 : d - 1.0 + k.ell0;

  const std::size_t N = z.components.size();
  std::vector<double> A(N), B(N);
  double F = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    A[i] = z.components[i].l2();
    B[i] = z.components[i].dirichlet();
    out.weiss_z += weiss_homogeneous(d, gamma, A[i], B[i]);
    F += B[i] - gamma * gamma * A[i];
    if (A[i] > 0.0 && B[i] < threshold * A[i]) out.low_components.push_back(static_cast<int>(i));
  }
  if (out.low_components.size() > 2)
    throw Error("epiperimetric", "more than two low-mode components in a segregated trace");

  auto homogeneous = [gamma](const TraceComponent& c) {
    PolarField w;
    w.value = [c, gamma](double r, double t) { return std::pow(r, gamma) * c.value(t); };
    w.dr = [c, gamma](double r, double t) { return gamma * std::pow(r, gamma - 1.0) * c.value(t); };
    w.dt = [c, gamma](double r, double t) { return std::pow(r, gamma) * c.derivative(t); };
    return w;
  };
  for (const auto& c : z.components) out.components.push_back(homogeneous(c));

  if (F <= 0.0) {
    out.identity = true;
    out.weiss_w = out.weiss_z;
    return out;
  }

  out.params = high_mode_parameters(d, gamma, k.ell0);
  const double rho = out.params.rho, tau = gamma + out.params.a;
  auto is_low = [&](std::size_t i) {
    return std::find(out.low_components.begin(), out.low_components.end(), static_cast<int>(i)) !=
           out.low_components.end();
  };
  for (std::size_t i = 0; i < N; ++i) {
    if (is_low(i) || A[i] == 0.0) continue;
    out.difference += truncation_gain(d, gamma, rho, tau, A[i], B[i]);
    const auto c = z.components[i];
    auto g = [rho, tau](double r) { return r <= rho ? 0.0 : std::pow((r - rho) / (1.0 - rho), tau); };
    auto dg = [rho, tau](double r) {
      return r <= rho ? 0.0 : tau * std::pow((r - rho) / (1.0 - rho), tau - 1.0) / (1.0 - rho);
    };
    PolarField w;
    w.value = [c, g](double r, double t) { return g(r) * c.value(t); };
    w.dr = [c, dg](double r, double t) { return dg(r) * c.value(t); };
    w.dt = [c, g](double r, double t) { return g(r) * c.derivative(t); };
    w.breaks = {rho};
    out.components[i] = w;
  }

  if (!out.low_components.empty()) {
    const int i1 = out.low_components[0];
    const int i2 = out.low_components.size() > 1 ? out.low_components[1] : -1;
    SphericalTrace g = z.components[i1].coefficients(z.setting, j_max);
    double Ag = A[i1], Bg = B[i1];
    if (i2 >= 0) {
      const SphericalTrace g2 = z.components[i2].coefficients(z.setting, j_max);
      const int first = z.setting == Setting::half ? 1 : 0;
      if (g2.a[first] != 0.0) out.first_mode_ratio = g.a[first] / g2.a[first];
      for (int j = 0; j <= j_max; ++j) {
        g.a[j] -= g2.a[j];
        if (!g.b.empty()) g.b[j] -= g2.b[j];
      }
      Ag += A[i2];
      Bg += B[i2];
    }
    // Modes above j_max contribute at most (|grad g|^2 - sum j^2 m_j) / (j_max + 1).
    double harmonic = 0.0, captured = 0.0;
    for (int j = 0; j <= j_max; ++j) {
      harmonic += g.mass(j) * (j - gamma);
      captured += j * j * g.mass(j);
    }
    harmonic += std::max(0.0, Bg - captured) / (j_max + 1.0);
    const double gap = std::pow(rho, d + 2.0 * gamma - 2.0) * (harmonic - weiss_homogeneous(d, gamma, Ag, Bg));
    if (gap < 0.0) {
      out.harmonic_used = true;
      out.difference += gap;
      const PolarField h = harmonic_field(g);
      const double s = std::pow(rho, gamma);
      for (int idx : {i1, i2}) {
        if (idx < 0) continue;
        const double sign = idx == i1 ? 1.0 : -1.0;
        const auto c = z.components[idx];
        PolarField w;
        w.value = [=](double r, double t) {
          if (r >= rho) return std::pow(r, gamma) * c.value(t);
          return s * std::max(0.0, sign * h.value(r / rho, t));
        };
        w.dr = [=](double r, double t) {
          if (r >= rho) return gamma * std::pow(r, gamma - 1.0) * c.value(t);
          return sign * h.value(r / rho, t) > 0.0 ? sign * s / rho * h.dr(r / rho, t) : 0.0;
        };
        w.dt = [=](double r, double t) {
          if (r >= rho) return std::pow(r, gamma) * c.derivative(t);
          return sign * h.value(r / rho, t) > 0.0 ? sign * s * h.dt(r / rho, t) : 0.0;
        };
        w.breaks = {rho};
        out.components[idx] = w;
      }
    }
  }

  out.weiss_w = out.weiss_z + out.difference;
  if (out.weiss_z > 0.0) out.achieved = -out.difference / out.weiss_z;
  const double L = arc_length(z.setting);
  for (int k2 = 0; k2 < 2048; ++k2) {
    const double t = (k2 + 0.5) * L / 2048;
    for (std::size_t i = 0; i < N; ++i)
      out.trace_mismatch =
          std::max(out.trace_mismatch, std::abs(out.components[i].value(1.0, t) - z.components[i].value(t)));
  }
  return out;
}

double compute_qd_squared(double budget, int nodes) {
  std::vector<double> v(nodes);
  const double h = pi / nodes;
  for (int k = 0; k < nodes; ++k) {
    const double s = std::sin(2.0 * (k + 0.5) * h);
    v[k] = 2.0 / pi * s * s;
  }
  std::sort(v.begin(), v.end(), std::greater<>());
  double left = budget * pi, sum = 0.0;
  for (double x : v) {
    if (left <= 0.0) break;
    const double take = std::min(h, left);
    sum += take * x;
    left -= take;
  }
  return sum;
}

double qd_squared_closed_form() { return 2.0 / 3.0 + std::sqrt(3.0) / (2.0 * pi); }

double delta_d(double q, int d) {
  if (q < 0.0 || q >= 1.0) throw Error("epiperimetric", "delta_d needs 0 <= q < 1");
  const double b = d + 2.0;
  return (-b + std::sqrt(b * b + 4.0 * (1.0 - q * q) * (d + 3.0))) / 2.0;
}

double ell0(int d, double q_squared) { return 0.5 * (1.0 - q_squared) * (d + 3.0); }

double eps_boundary(int d, double gamma, double ell) {
  const auto p = high_mode_parameters(d, gamma, ell);
  return std::min(eps1(d, gamma) * std::pow(p.rho, d + 2.0 * gamma - 2.0), p.eps2);
}

double eps_boundary_printed(int d, double gamma, double ell) {
  const auto p = high_mode_parameters(d, gamma, ell);
  return std::min(eps1(d, gamma) * std::pow(p.rho, d), p.eps2);
}

EpiConstants certified_constants(int d) {
  if (d != 2) throw Error("epiperimetric", "constants are computed for d = 2");
  EpiConstants k;
  k.d = d;
  k.q_squared = qd_squared_closed_form();
  k.delta = delta_d(std::sqrt(k.q_squared), d);
  k.ell0 = ell0(d, k.q_squared);
  k.eps_bd = k.eps_bd_printed = 1.0;
  for (int i = 0; i <= 20; ++i) {
    const double g = 1.0 + i / 20.0;
    const double e = eps_boundary(d, g, k.ell0);
    k.gamma_grid.push_back(g);
    k.eps_on_grid.push_back(e);
    if (e < k.eps_bd) {
      k.eps_bd = e;
      k.gamma_at_min = g;
    }
    k.eps_bd_printed = std::min(k.eps_bd_printed, eps_boundary_printed(d, g, k.ell0));
  }
  k.eps_int = eps_boundary(d, 1.0, k.ell0);
  return k;
}

}  // namespace fblab
