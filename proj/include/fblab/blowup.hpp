#pragma once

#include <string>
#include <vector>

#include "fblab/field.hpp"
#include "fblab/frequency.hpp"
#include "fblab/moduli.hpp"

namespace fblab {

enum class ProfileKind { deg1, deg2, interior_deg1 };
std::string to_string(ProfileKind k);

// Homogeneous model on the unit ball, in world orientation.
//   deg1:          P_j = a (-x.nu)^+
//   deg2:          P_j = a (x.e)^- (-x.nu)^+,  P_k = a (x.e)^+ (-x.nu)^+,  e.nu = 0
//   interior_deg1: P_j = a (x.e)^+,             P_k = a (x.e)^-
struct BlowupProfile {
  ProfileKind kind = ProfileKind::deg1;
  double a = 0.0;
  Vec2 e;
  Vec2 normal;  // outward normal at the center, unused for interior profiles
  int j = -1;
  int k = -1;
  int components = 0;

  // shape with unit amplitude
  double shape(int i, Vec2 x) const;
  double value(int i, Vec2 x) const { return a * shape(i, x); }
};

struct RescaleOptions {
  int min_theta = 64;
  int min_radial = 32;
  double h = 0.0;                 // 0 takes the field's spacing
  double min_radius_factor = 8.0; // radii below factor * h are refused
};

// u(x0 + r y) / r^gamma sampled on a polar rule of the unit ball, plus its trace on the
// unit circle. Samples outside D are zero.
struct RescaledField {
  double r = 0.0;
  double gamma = 0.0;
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::vector<Vec2> circle;
  double circle_weight = 0.0;
  std::vector<std::vector<double>> values;  // [component][point]
  std::vector<std::vector<double>> trace;   // [component][circle point]

  int components() const { return static_cast<int>(values.size()); }
  double norm_sq() const;        // sum_i ||V_i||^2 on B1
  double trace_norm_sq() const;  // sum_i ||V_i||^2 on the unit circle
};

RescaledField rescale(const Field& u, const Center& c, double r, double gamma, const RescaleOptions& opt = {});

double l2_gap(const RescaledField& v, const BlowupProfile& p);     // sum_i ||V_i - P_i||^2 on B1
double linf_gap(const RescaledField& v, const BlowupProfile& p);   // sum_i sup |V_i - P_i|
double trace_gap(const RescaledField& a, const RescaledField& b);  // sum_i ||A_i - B_i||^2 on the circle

struct ProfileFit {
  BlowupProfile profile;
  double residual = 0.0;           // l2_gap at the minimizer
  double relative_residual = 0.0;  // residual / sum_i ||V_i||^2
  bool degenerate = false;         // amplitude below 1e-8
};

// Least squares over the amplitude, the direction and the active indices.
ProfileFit fit_profile(const RescaledField& v, Vec2 normal, ProfileKind kind);

// Closed-form amplitude of a fixed shape.
double best_amplitude(const RescaledField& v, const BlowupProfile& shape);

struct RateSample {
  double r = 0.0;
  double l2_gap = 0.0;
  double linf_gap = 0.0;
  double dini = 0.0;    // int_0^r sigma0/t
  double cauchy = 0.0;  // trace gap to the previous (smaller) radius, 0 for the first
  double amplitude = 0.0;
};

struct BlowupRate {
  BlowupProfile profile;  // terminal profile
  std::vector<RateSample> samples;
  double h_ref = 0.0;           // H at the largest radius
  double c_rate = 0.0;          // max l2_gap / (h_ref dini)
  double c_cauchy = 0.0;        // max cauchy / (h_ref (dini(r2) - dini(r1)))
  // the same constants with the scale-free height H(r_max) / r_max^(2 gamma) in place of h_ref
  double c_rate_scaled = 0.0;
  double c_cauchy_scaled = 0.0;
  double decay_exponent = 0.0;  // slope of log l2_gap against log r, +inf for vanishing gaps
  double linf_exponent = 0.0;
  double required_exponent = 0.0;  // alpha0 - 0.1 for power moduli, -inf otherwise
  bool ok = false;
  std::string csv() const;
};

// Gamma must be 1 or 2 at boundary centers and 1 at interior centers.
BlowupRate blowup_rate(const Field& u, const Center& c, std::vector<double> radii, double gamma,
                       const Modulus& sigma0, const RescaleOptions& opt = {});

// Sup distance between the 1-homogeneous rescaling at r and its fitted degree-one profile.
double linfty_gap(const Field& u, const Center& c, double r, const RescaleOptions& opt = {});

// Largest sup norm of a function on the unit disk with Lipschitz constant lip and squared L2
// norm l2_sq whose maximum sits at distance >= sup/lip from the unit circle.
double linfty_bound(double l2_sq, double lip);

// Amplitude normalization of the unit-height profile. `printed` integrates the first power of
// x_d^+ (and of x_{d-1}^+ x_d^+), `squared` integrates the squares.
struct AmplitudeConstants {
  double printed = 0.0;
  double squared = 0.0;
};
AmplitudeConstants amplitude_constants(ProfileKind kind);

}  // namespace fblab
