#include "fblab/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fblab/error.hpp"
#include "fblab/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

namespace fblab {

namespace detail {

// Running maximum of q(s) = log(f(t)/t), t = e^-s, over [s_top, s]. Between consecutive
// nodes q is convex (power, log-power and log-linear tables all are), so on each segment the
// running maximum is max(M, q(s)) with M the maximum up to the segment start, and the switch
// from flat to rising happens at a single crossing found by bisection.
struct SmoothedTable {
  Modulus base;
  double s_top = 0.0;  // -log R
  std::vector<double> starts, levels, crossings;

  double q(double s) const { return base.log_at_log(s) + s; }
  double envelope(double s) const {
    if (s <= s_top) return q(s_top);
    const auto it = std::upper_bound(starts.begin(), starts.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - starts.begin()) - 1;
    return std::max(levels[k], q(s));
  }
  double h1(double s) const { return std::exp(envelope(s) - s); }

  template <class Weight>
  double integrate_cells(double a, double b, double kink, Weight weight) const {
    using rule = boost::math::quadrature::gauss<double, 8>;
    std::vector<double> cuts{a, b};
    if (kink > a && kink < b) cuts.push_back(kink);
    if (s_top > a && s_top < b) cuts.push_back(s_top);
    auto first = std::upper_bound(starts.begin(), starts.end(), a);
    for (auto it = first; it != starts.end() && *it < b; ++it) cuts.push_back(*it);
    std::size_t k0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, first - starts.begin() - 1));
    for (std::size_t k = k0; k < crossings.size() && starts[k] < b; ++k)
      if (crossings[k] > a && crossings[k] < b) cuts.push_back(crossings[k]);
    std::sort(cuts.begin(), cuts.end());
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (cuts[k + 1] <= cuts[k]) continue;
      sum += rule::integrate([&](double u) { return h1(u) * weight(u); }, cuts[k], cuts[k + 1]);
    }
    return sum;
  }
  double h2(double s) const {
    return 2.0 * integrate_cells(s, s + std::numbers::ln2, s, [](double) { return 1.0; });
  }
  double h(double s) const {
    const double l = std::numbers::ln2;
    return 4.0 * integrate_cells(s, s + 2.0 * l, s + l, [s, l](double u) {
             const double v = u - s;
             return v <= l ? v : 2.0 * l - v;
           });
  }
};

}  // namespace detail

namespace {

constexpr double ln2 = std::numbers::ln2;

// Integral over [a, b] of a function that decays away from a, split in dyadic pieces from a.
double integrate_from_peak(const std::function<double(double)>& g, double a, double b) {
  double sum = 0.0;
  double lo = a;
  int quiet = 0;
  for (int k = 0; lo < b; ++k) {
    const double hi = std::min(b, a + std::ldexp(1.0, k + 1) - 1.0);
    const double piece = integrate(g, lo, hi, 1e-12);
    sum += piece;
    lo = hi;
    if (std::abs(piece) <= 1e-17 * std::abs(sum)) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
  }
  return sum;
}

}  // namespace

Modulus Modulus::power(double coefficient, double exponent, double r_max) {
  if (coefficient < 0.0 || exponent <= 0.0) throw Error("moduli", "power modulus needs c >= 0 and alpha > 0");
  Modulus m;
  m.kind_ = ModulusKind::power;
  m.coefficient_ = coefficient;
  m.exponent_ = exponent;
  m.r_max_ = r_max;
  return m;
}

Modulus Modulus::log_power(double coefficient, double exponent, double r_max) {
  if (coefficient < 0.0 || exponent <= 0.0) throw Error("moduli", "log-power modulus needs c >= 0 and beta > 0");
  if (r_max >= 1.0) throw Error("moduli", "log-power modulus is defined only below r = 1");
  Modulus m;
  m.kind_ = ModulusKind::log_power;
  m.coefficient_ = coefficient;
  m.exponent_ = exponent;
  m.r_max_ = r_max;
  return m;
}

Modulus Modulus::tabulated(std::vector<double> radii, std::vector<double> values) {
  if (radii.size() < 2 || radii.size() != values.size()) throw Error("moduli", "tabulated modulus needs >= 2 samples");
  Modulus m;
  m.kind_ = ModulusKind::tabulated;
  m.r_max_ = radii.back();
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (radii[k] <= 0.0 || values[k] <= 0.0) throw Error("moduli", "tabulated samples must be positive");
    if (k > 0 && (radii[k] <= radii[k - 1] || values[k] < values[k - 1]))
      throw Error("moduli", "tabulated modulus must be increasing in r and nondecreasing in value");
    m.log_r_.push_back(std::log(radii[k]));
    m.log_v_.push_back(std::log(values[k]));
  }
  return m;
}

double Modulus::at_log(double s) const {
  switch (kind_) {
    case ModulusKind::power:
      return coefficient_ * std::exp(-exponent_ * s);
    case ModulusKind::log_power:
      if (s <= 0.0) return std::numeric_limits<double>::infinity();
      return coefficient_ * std::pow(s, -exponent_);
    case ModulusKind::tabulated: {
      const double lr = -s;
      if (lr <= log_r_.front()) return std::exp(log_v_.front() + (lr - log_r_.front()));
      if (lr >= log_r_.back()) return std::exp(log_v_.back());
      const auto it = std::upper_bound(log_r_.begin(), log_r_.end(), lr);
      const std::size_t k = static_cast<std::size_t>(it - log_r_.begin()) - 1;
      const double t = (lr - log_r_[k]) / (log_r_[k + 1] - log_r_[k]);
      return std::exp(log_v_[k] + t * (log_v_[k + 1] - log_v_[k]));
    }
    case ModulusKind::smoothed:
      return smooth_->h(s);
  }
  return 0.0;
}

double Modulus::log_at_log(double s) const {
  switch (kind_) {
    case ModulusKind::power:
      return std::log(coefficient_) - exponent_ * s;
    case ModulusKind::log_power:
      if (s <= 0.0) return std::numeric_limits<double>::infinity();
      return std::log(coefficient_) - exponent_ * std::log(s);
    case ModulusKind::tabulated: {
      const double lr = -s;
      if (lr <= log_r_.front()) return log_v_.front() + (lr - log_r_.front());
      if (lr >= log_r_.back()) return log_v_.back();
      const auto it = std::upper_bound(log_r_.begin(), log_r_.end(), lr);
      const std::size_t k = static_cast<std::size_t>(it - log_r_.begin()) - 1;
      const double t = (lr - log_r_[k]) / (log_r_[k + 1] - log_r_[k]);
      return log_v_[k] + t * (log_v_[k + 1] - log_v_[k]);
    }
    case ModulusKind::smoothed:
      return std::log(smooth_->h(s));
  }
  return 0.0;
}

std::vector<double> Modulus::log_breakpoints() const {
  std::vector<double> out;
  for (auto it = log_r_.rbegin(); it != log_r_.rend(); ++it) out.push_back(-*it);
  return out;
}

double Modulus::operator()(double r) const {
  if (r <= 0.0) return 0.0;
  return at_log(-std::log(r));
}

double Modulus::derivative(double r) const {
  if (r <= 0.0) throw Error("moduli", "derivative requested at r <= 0");
  const double s = -std::log(r);
  switch (kind_) {
    case ModulusKind::power:
      return coefficient_ * exponent_ * std::pow(r, exponent_ - 1.0);
    case ModulusKind::log_power:
      return coefficient_ * exponent_ * std::pow(s, -exponent_ - 1.0) / r;
    case ModulusKind::tabulated: {
      const double lr = -s;
      double slope = 1.0;
      if (lr > log_r_.front() && lr < log_r_.back()) {
        const auto it = std::upper_bound(log_r_.begin(), log_r_.end(), lr);
        const std::size_t k = static_cast<std::size_t>(it - log_r_.begin()) - 1;
        slope = (log_v_[k + 1] - log_v_[k]) / (log_r_[k + 1] - log_r_[k]);
      } else if (lr >= log_r_.back()) {
        slope = 0.0;
      }
      return slope * (*this)(r) / r;
    }
    case ModulusKind::smoothed:
      return 2.0 / r * (smooth_->h2(s) - smooth_->h2(s + ln2));
  }
  return 0.0;
}

double Modulus::second_derivative(double r) const {
  if (r <= 0.0) throw Error("moduli", "derivative requested at r <= 0");
  const double s = -std::log(r);
  switch (kind_) {
    case ModulusKind::power:
      return coefficient_ * exponent_ * (exponent_ - 1.0) * std::pow(r, exponent_ - 2.0);
    case ModulusKind::log_power: {
      const double b = exponent_;
      return coefficient_ * b * std::pow(s, -b - 2.0) * ((b + 1.0) - s) / (r * r);
    }
    case ModulusKind::tabulated: {
      const double d1 = derivative(r);
      const double v = (*this)(r);
      const double p = v > 0.0 ? d1 * r / v : 0.0;
      return p * (p - 1.0) * v / (r * r);
    }
    case ModulusKind::smoothed: {
      const auto& t = *smooth_;
      return 2.0 / (r * r) *
             (-t.h2(s) + t.h2(s + ln2) + 2.0 * t.h1(s) - 4.0 * t.h1(s + ln2) + 2.0 * t.h1(s + 2.0 * ln2));
    }
  }
  return 0.0;
}

bool Modulus::regular() const {
  switch (kind_) {
    case ModulusKind::power:
      return exponent_ <= 1.0 || coefficient_ == 0.0;
    case ModulusKind::smoothed:
      return true;
    case ModulusKind::log_power:
      return check_regularity(*this, 1e-12, r_max_, 200).ok();
    case ModulusKind::tabulated:
      return false;
  }
  return false;
}

DiniValue iterated_dini(const Modulus& sigma, double r, int depth) {
  if (depth < 0) throw Error("moduli", "dini depth must be >= 0");
  if (r > sigma.r_max() * (1.0 + 1e-12)) throw Error("moduli", "dini radius beyond the modulus domain");
  if (depth == 0) return {sigma(r), false};
  if (r <= 0.0) return {0.0, false};
  const double s0 = -std::log(r);
  double factorial = 1.0;
  for (int k = 2; k < depth; ++k) factorial *= k;
  auto g = [&](double t) {
    const double lag = t - s0;
    return (depth == 1 ? 1.0 : std::pow(lag, depth - 1) / factorial) * sigma.at_log(t);
  };
  const auto tail = integrate_tail(g, s0, 1e-13);
  return {tail.value, tail.divergent};
}

DiniValue weighted_dini(const Modulus& sigma, double r, double log_weight) {
  if (r > sigma.r_max() * (1.0 + 1e-12)) throw Error("moduli", "dini radius beyond the modulus domain");
  if (r <= 0.0) return {0.0, false};
  const double s0 = -std::log(r);
  auto g = [&](double t) { return sigma.at_log(t) * (log_weight == 0.0 ? 1.0 : std::pow(std::abs(t), log_weight)); };
  const auto tail = integrate_tail(g, s0, 1e-13);
  return {tail.value, tail.divergent};
}

DiniValue dini_integral(const Modulus& sigma, double r, int depth, double log_weight) {
  if (depth == 0) return weighted_dini(sigma, r, log_weight);
  if (log_weight != 0.0) throw Error("moduli", "log weight applies to depth 0 only");
  return iterated_dini(sigma, r, depth);
}

std::pair<bool, bool> check_alpha_dini_equivalence(const Modulus& f, int n, double eps, double R) {
  if (n < 1 || eps < 0.0) throw Error("moduli", "alpha-Dini check needs n >= 1 and eps >= 0");
  const bool first = !weighted_dini(f, R, n + eps).divergent;
  // int_{s0}^inf s^eps D^n(s) ds = int_{s0}^inf f(t) K(t) dt with
  // K(t) = int_{s0}^t s^eps (t - s)^(n-1)/(n-1)! ds
  const double s0 = -std::log(R);
  double factorial = 1.0;
  for (int k = 2; k <= n; ++k) factorial *= k;
  auto kernel = [&](double t) {
    if (eps == 0.0) return std::pow(t - s0, n) / factorial;
    return integrate([&](double s) { return std::pow(s, eps) * std::pow(t - s, n - 1); }, s0, t, 1e-12) * n / factorial;
  };
  const auto outer = integrate_tail([&](double t) { return f.at_log(t) * kernel(t); }, s0, 1e-12);
  return {first, !outer.divergent};
}

Modulus smooth_modulus(const Modulus& f) {
  auto table = std::make_shared<detail::SmoothedTable>();
  auto& t = *table;
  t.base = f;
  t.s_top = -std::log(f.r_max());
  const double ds = 1.0 / 32.0, span = 80.0;
  std::vector<double> nodes;
  for (int k = 0; k < 32 * 80; ++k) nodes.push_back(t.s_top + k * ds);
  for (double kink : f.log_breakpoints())
    if (kink > t.s_top && kink < t.s_top + span) nodes.push_back(kink);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  double level = t.q(t.s_top);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double a = nodes[k];
    const double b = k + 1 < nodes.size() ? nodes[k + 1] : a + ds;
    level = std::max(level, t.q(a));
    t.starts.push_back(a);
    t.levels.push_back(level);
    double crossing = std::numeric_limits<double>::quiet_NaN();
    if (t.q(b) > level && t.q(a) < level) {
      double lo = a, hi = b;
      for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (t.q(mid) > level ? hi : lo) = mid;
      }
      crossing = 0.5 * (lo + hi);
    }
    t.crossings.push_back(crossing);
  }
  Modulus m;
  m.kind_ = ModulusKind::smoothed;
  m.r_max_ = f.r_max();
  m.smooth_ = table;
  return m;
}

double alpha_of_sigma(const Modulus& sigma, double r) {
  if (!sigma.regular()) throw Error("moduli", "alpha requires a smoothed (regular) modulus");
  if (r <= 0.0) return 0.0;
  return 3.0 * (sigma(r) + r * sigma.derivative(r));
}

double alpha_derivative(const Modulus& sigma, double r) {
  if (!sigma.regular()) throw Error("moduli", "alpha requires a smoothed (regular) modulus");
  return 3.0 * (2.0 * sigma.derivative(r) + r * sigma.second_derivative(r));
}

bool RegularityReport::ok() const {
  const double tol = 1e-9;
  return max_first <= 2.0 + tol && max_second <= 4.0 + tol && max_ratio_slope <= tol && min_alpha_lower >= 1.0 - tol &&
         max_alpha_upper <= 1.0 + tol && max_alpha_slope <= 1.0 + tol;
}

RegularityReport check_regularity(const Modulus& sigma, double r_min, double r_max, int samples) {
  RegularityReport rep;
  rep.min_alpha_lower = std::numeric_limits<double>::infinity();
  const double a = std::log(r_min), b = std::log(r_max);
  for (int k = 0; k < samples; ++k) {
    const double r = std::exp(a + (b - a) * (k + 0.5) / samples);
    const double v = sigma(r);
    if (v <= 0.0) continue;
    const double d1 = sigma.derivative(r);
    const double d2 = sigma.second_derivative(r);
    rep.max_first = std::max(rep.max_first, r * std::abs(d1) / v);
    rep.max_second = std::max(rep.max_second, r * r * std::abs(d2) / v);
    rep.max_ratio_slope = std::max(rep.max_ratio_slope, r * d1 / v - 1.0);
    const double alpha = 3.0 * (v + r * d1);
    const double dalpha = 3.0 * (2.0 * d1 + r * d2);
    rep.min_alpha_lower = std::min(rep.min_alpha_lower, alpha / (3.0 * v));
    rep.max_alpha_upper = std::max(rep.max_alpha_upper, alpha / (6.0 * v));
    rep.max_alpha_slope = std::max(rep.max_alpha_slope, r * std::abs(dalpha) / (24.0 * v));
  }
  return rep;
}

DiniReport dini_report(const Modulus& sigma, const Modulus& sigma0, double R, double m_d) {
  DiniReport rep;
  const double top = 2.0 * R;
  const auto d0 = iterated_dini(sigma0, top, 1);
  rep.sigma0_dini = d0.value;
  rep.sigma0_divergent = d0.divergent;
  // int_{top}^inf D(s)/s0(s) ds = int_{top}^inf int_{top}^t sigma(t)/s0(s) ds dt
  const double s_top = -std::log(top);
  auto g = [&](double t) {
    const double ls = sigma.log_at_log(t);
    return integrate_from_peak([&](double v) { return std::exp(ls - sigma0.log_at_log(t - v)); }, 0.0, t - s_top);
  };
  const auto dd = integrate_tail(g, s_top, 1e-12);
  rep.double_dini = dd.value;
  rep.double_divergent = dd.divergent;
  rep.power_condition = true;
  const int samples = 400;
  for (int k = 0; k < samples; ++k) {
    const double r = top * std::exp(-30.0 * (k + 0.5) / samples);
    // d/dr (r^-m s0) = r^-m (s0' - m s0/r)
    if (sigma0.derivative(r) - m_d * sigma0(r) / r > 1e-12 * sigma0(r) / r) {
      rep.power_condition = false;
      break;
    }
  }
  rep.admissible = rep.power_condition && !rep.sigma0_divergent && !rep.double_divergent;
  rep.dini = [sigma](double r) { return iterated_dini(sigma, r, 1); };
  return rep;
}

ModulusRelations check_relations(const Modulus& sigma, const Modulus& sigma0, double R, double m_d, int samples) {
  ModulusRelations rel;
  const double top = 2.0 * R;
  auto g = [&](double s) {
    const double s0v = sigma0.at_log(s);
    return s0v > 0.0 ? sigma.at_log(s) / s0v : 0.0;
  };
  rel.c_sigma0 = 0.25 * integrate_tail(g, -std::log(top), 1e-12).value;
  rel.c_tilde = sigma0(top) / (m_d * std::pow(top, m_d));
  rel.nondegeneracy = std::numeric_limits<double>::infinity();
  rel.min_dini0_over_power = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double r = top * std::exp(-12.0 * (k + 0.5) / samples);
    const double v = sigma(r);
    const double dini = iterated_dini(sigma, r, 1).value;
    const double dini0 = iterated_dini(sigma0, r, 1).value;
    rel.nondegeneracy = std::min(rel.nondegeneracy, v / r);
    if (dini > 0.0) rel.max_sigma_over_dini = std::max(rel.max_sigma_over_dini, v / dini);
    if (dini0 > 0.0) rel.max_sigma_over_c_dini0 = std::max(rel.max_sigma_over_c_dini0, v / (rel.c_sigma0 * dini0));
    rel.min_dini0_over_power = std::min(rel.min_dini0_over_power, dini0 / (rel.c_tilde * std::pow(r, m_d)));
  }
  return rel;
}

double upsilon(const Modulus& sigma0, double r) {
  if (r <= 0.0) return 0.0;
  const auto d = iterated_dini(sigma0, r, 1);
  if (d.divergent) throw Error("moduli", "sigma0 is not Dini-integrable");
  return r * r * std::sqrt(d.value);
}

double theta(const Modulus& sigma0, double s) {
  if (s < 0.0) throw RangeError("moduli", "theta argument must be nonnegative");
  if (s == 0.0) return 0.0;
  const double top = sigma0.r_max();
  if (s > upsilon(sigma0, top) * (1.0 + 1e-14)) throw RangeError("moduli", "argument outside the range of Upsilon");
  double hi = std::log(top);
  double lo = hi;
  while (upsilon(sigma0, std::exp(lo)) > s) lo -= 1.0;
  // Bisection in log r; relative tolerance 1e-12 on r.
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (upsilon(sigma0, std::exp(mid)) < s) lo = mid; else hi = mid;
  }
  const double root = std::exp(0.5 * (lo + hi));
  return std::sqrt(iterated_dini(sigma0, root, 1).value);
}

std::pair<double, double> upsilon_theta(const Modulus& sigma0, double r) { return {upsilon(sigma0, r), theta(sigma0, r)}; }

}  // namespace fblab
