#pragma once

#include <functional>
#include <vector>

#include "fblab/linalg.hpp"

namespace fblab {

struct Node1D {
  double x;
  double w;
};

// Composite 16-point Gauss-Legendre rule on [a, b] with `panels` equal panels.
std::vector<Node1D> gauss_legendre(double a, double b, int panels);

// Polar product rule on a disk of radius r: composite Gauss-Legendre in the radius,
// midpoint rule in the angle starting at theta0. Angular cell edges sit at
// theta0 + k*2pi/n_theta, so piecewise integrands with kinks on those rays are exact.
struct PolarRule {
  double radius = 0.0;
  double theta0 = 0.0;
  int n_theta = 0;
  std::vector<Node1D> radial;  // radius nodes with weights including the Jacobian r
  std::vector<double> angles;  // cell midpoints
  double dtheta = 0.0;

  std::size_t size() const { return radial.size() * angles.size(); }
};

PolarRule make_polar_rule(double radius, int n_r, int n_theta, double theta0 = 0.0);

// Angular resolution rounded up to a multiple of 24 so that rays at multiples of pi/12
// fall on cell edges.
int round_theta_count(int n);

struct TailIntegral {
  double value = 0.0;
  bool divergent = false;
};

// Integral of g over [s0, infinity), summed over dyadic pieces [s0 + 2^k - 1, s0 + 2^(k+1) - 1].
// Declared divergent when pieces are still non-negligible at the cap s0 + 2^100.
TailIntegral integrate_tail(const std::function<double(double)>& g, double s0, double abs_tol = 1e-12);

// Adaptive Gauss-Kronrod on a finite interval.
double integrate(const std::function<double(double)>& g, double a, double b, double abs_tol = 1e-13);

}  // namespace fblab
