#include "fblab/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "fblab/error.hpp"

namespace fblab {

std::vector<Node1D> gauss_legendre(double a, double b, int panels) {
  using rule = boost::math::quadrature::gauss<double, 16>;
  const auto& xs = rule::abscissa();
  const auto& ws = rule::weights();
  std::vector<Node1D> out;
  out.reserve(static_cast<std::size_t>(panels) * 16);
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    const double half = 0.5 * width;
    // boost stores the non-negative half of the symmetric rule.
    for (std::size_t k = xs.size(); k-- > 0;) {
      if (xs[k] == 0.0) continue;
      out.push_back({mid - half * xs[k], half * ws[k]});
    }
    for (std::size_t k = 0; k < xs.size(); ++k) out.push_back({mid + half * xs[k], half * ws[k]});
  }
  return out;
}

int round_theta_count(int n) { return ((std::max(n, 24) + 23) / 24) * 24; }

PolarRule make_polar_rule(double radius, int n_r, int n_theta, double theta0) {
  if (n_r < 8 || n_theta < 8) throw Error("quadrature", "polar resolution below 8 per direction");
  PolarRule rule;
  rule.radius = radius;
  rule.theta0 = theta0;
  rule.n_theta = n_theta;
  rule.dtheta = 2.0 * std::numbers::pi / n_theta;
  const int panels = std::max(1, (n_r + 15) / 16);
  rule.radial = gauss_legendre(0.0, radius, panels);
  for (auto& node : rule.radial) node.w *= node.x;
  rule.angles.resize(n_theta);
  for (int k = 0; k < n_theta; ++k) rule.angles[k] = theta0 + (k + 0.5) * rule.dtheta;
  return rule;
}

double integrate(const std::function<double(double)>& g, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  double err = 0.0;
  double rel = abs_tol;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 10, rel, &err);
  return v;
}

TailIntegral integrate_tail(const std::function<double(double)>& g, double s0, double abs_tol) {
  TailIntegral out;
  double lo = s0;
  int quiet = 0;
  std::vector<double> pieces;
  for (int k = 0; k <= 100; ++k) {
    const double hi = s0 + std::ldexp(1.0, k + 1) - 1.0;
    const double piece = integrate(g, lo, hi, 1e-12);
    out.value += piece;
    pieces.push_back(piece);
    lo = hi;
    if (!std::isfinite(out.value)) {
      out.divergent = true;
      return out;
    }
    if (std::abs(piece) <= abs_tol + 1e-14 * std::abs(out.value)) {
      if (++quiet >= 4) return out;
      continue;
    }
    quiet = 0;
    // Algebraic tails s^-p give dyadic pieces in geometric ratio 2^(1-p); sum the rest
    // once that ratio has settled clearly below one.
    if (k >= 20) {
      double qmin = 1e300, qmax = -1e300;
      for (int m = 0; m < 5; ++m) {
        const double q = pieces[k - m] / pieces[k - m - 1];
        qmin = std::min(qmin, q);
        qmax = std::max(qmax, q);
      }
      if (qmin >= 0.99) break;
      if (qmin > 0.0 && qmax < 0.95 && qmax - qmin < 0.02) {
        const double q = pieces[k] / pieces[k - 1];
        out.value += piece * q / (1.0 - q);
        return out;
      }
    }
  }
  out.divergent = true;
  return out;
}

}  // namespace fblab
