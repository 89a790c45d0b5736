#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fblab/field.hpp"
#include "fblab/geometry.hpp"

namespace fblab {

// Interior centers use plain balls. Boundary centers carry a chart; by default balls are
// transformed by the straightening map, and `straighten = false` uses B_r(x0) ∩ D instead.
struct Center {
  Vec2 x;
  std::optional<BoundaryChart> chart;
  bool straighten = true;
  // only used when straighten is false: membership in D
  std::function<bool(Vec2)> inside;

  static Center interior(Vec2 x) { return {x, std::nullopt, true, nullptr}; }
  static Center boundary(const BoundaryChart& chart) { return {chart.origin, chart, true, nullptr}; }
  static Center boundary_plain(const BoundaryChart& chart, const Domain& domain);
  bool is_boundary() const { return chart.has_value(); }
};

struct Sampling {
  int min_theta = 64;
  int min_radial = 32;
  // spacing used for the resolution rule; 0 takes the field's own spacing
  double h = 0.0;
};

struct RingTerms {
  std::vector<double> dirichlet;  // per component, (1/r^(d-2)) int A grad v . grad v
  std::vector<double> potential;  // per component, (1/r^(d-2)) int p_i v^2
  std::vector<double> height;     // per component, (1/r^(d-1)) int_S v^2 mu
  double energy() const;
  double total_height() const;
};

RingTerms ring_terms(const Field& u, const Center& c, double r, Sampling s = {});
double height(const Field& u, const Center& c, double r, Sampling s = {});
double energy(const Field& u, const Center& c, double r, Sampling s = {});
double weiss(const Field& u, const Center& c, double r, double gamma, Sampling s = {});

enum class PointClass { Z1, Z2, S, unknown };
std::string to_string(PointClass c);

PointClass classify_boundary_point(double gamma, double delta, double tol);

struct RadiusSample {
  double r = 0.0;
  double E = 0.0;
  double H = 0.0;
  double N = 0.0;
  std::vector<double> weiss;  // one per requested gamma
  RingTerms terms;
  bool reliable = false;
  double dini = 0.0;  // int_0^r sigma(t)/t dt of the chart modulus, 0 at interior centers
};

struct ProfileOptions {
  std::vector<double> weiss_gammas;
  double reliable_factor = 4.0;  // reliable radii satisfy r >= reliable_factor * h
  double correction = 0.0;       // constant in exp(C int_0^r sigma/t)(N + 1)
  Sampling sampling;
};

struct FrequencyProfile {
  Center center;
  std::vector<RadiusSample> samples;
  std::vector<double> weiss_gammas;
  double gamma_estimate = 0.0;
  bool estimated = false;
  double max_frequency = 0.0;   // observed bound for N over the samples
  double monotonicity_violation = 0.0;  // max relative drop of the corrected quantity
  std::string csv() const;
  std::vector<const RadiusSample*> reliable() const;
};

// Corrected quantity exp(C int_0^r sigma/t)(N(r) + 1).
double corrected_frequency(const RadiusSample& s, double C);

FrequencyProfile frequency_profile(const Field& u, const Center& c, const std::vector<double>& radii,
                                   const ProfileOptions& opt = {});

// Smallest C in [0, c_max] for which every profile's corrected quantity drops by at most tol
// (relative) between consecutive reliable radii; if none, c_max. Returns (C, worst drop at C).
std::pair<double, double> fit_almgren_constant(const std::vector<const FrequencyProfile*>& profiles, double tol,
                                               double c_max = 100.0);

struct HGrowth {
  bool valid = false;
  double slope = 0.0;    // least-squares slope of log H against log r
  double c_fit = 0.0;    // max of H(r) / (H(r_max) (r / r_max)^(2 gamma))
  double h_limit = 0.0;  // H(r)/r^(2 gamma) extrapolated linearly in r to 0
};

HGrowth check_H_growth(const FrequencyProfile& p, double gamma, int min_radii = 6);

// Largest |H'(r) - 2E(r)/r| r / (H(r) sigma(r)) over interior differences of reliable radii.
double height_derivative_constant(const FrequencyProfile& p);
// min over reliable radii and components of (E_i + H_i) / (0.5 (D_i + H_i)); >= 1 means coercive
double coercivity_ratio(const FrequencyProfile& p);
// Smallest C_W making W_gamma(r) + C_W H(r_max) int_0^r sigma/t nondecreasing over reliable radii.
double weiss_constant(const FrequencyProfile& p, std::size_t gamma_index);

double straightening_radius(double chart_radius, double lambda_sum, int d = 2);

}  // namespace fblab
