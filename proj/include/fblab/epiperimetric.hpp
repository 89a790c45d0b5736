#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace fblab {

// half: functions on the upper half circle (0, pi) vanishing at both ends, sine basis.
// full: functions on the whole circle, Fourier basis.
enum class Setting { half, full };

// Coefficients in the eigenbasis of the sphere Laplacian. a[j] multiplies the degree-j mode
// (sqrt(2/pi) sin(j t) in the half setting, cos(j t)/sqrt(pi) in the full setting, with
// 1/sqrt(2 pi) at j = 0); b[j] multiplies sin(j t)/sqrt(pi) in the full setting.
// The coefficient-space identities only use the mass per degree, so d can be any dimension.
struct SphericalTrace {
  int d = 2;
  Setting setting = Setting::half;
  std::vector<double> a;
  std::vector<double> b;
  double tail = 0.0;  // L2 mass not captured by the retained modes
  std::vector<double> samples;

  int max_degree() const;
  double mass(int j) const;
  double l2() const;         // sum a_j^2
  double dirichlet() const;  // sum j(j+d-2) a_j^2
  // d = 2 evaluation of the truncated series
  double value(double t) const;
  double derivative(double t) const;
};

SphericalTrace make_trace(Setting setting, std::vector<double> a, std::vector<double> b = {}, int d = 2);

// Uniform samples: half setting t_k = k pi / n for k = 0..n, full setting t_k = 2 pi k / n for
// k = 0..n-1. Coefficients by the trapezoid rule.
SphericalTrace fourier_decompose(const std::vector<double>& samples, Setting setting, int j_max = 64);

// Coefficient-space Weiss energies.
double weiss_homogeneous(int d, double gamma, const SphericalTrace& f);
double weiss_harmonic_extension(int d, double gamma, const SphericalTrace& f);
// Same values from the L2 and Dirichlet norms of the trace and the per-degree masses.
double weiss_homogeneous(int d, double gamma, double l2, double dirichlet);

struct GainCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double eps1 = 0.0;
};

GainCheck gain_harmonic_check(int d, double gamma, const SphericalTrace& f, double eps);
double eps1(int d, double gamma);

// A function on the unit disk (d = 2) in polar coordinates with its partial derivatives.
// Radial kinks listed in breaks are respected by the quadrature.
struct PolarField {
  std::function<double(double, double)> value;
  std::function<double(double, double)> dr;
  std::function<double(double, double)> dt;
  std::vector<double> breaks;
};

struct PolarQuadrature {
  int radial_panels = 8;
  int n_theta = 256;
};

PolarField homogeneous_field(const SphericalTrace& f, double gamma);
PolarField harmonic_field(const SphericalTrace& f);
PolarField truncated_field(const SphericalTrace& f, double rho, double tau);
// Inside B_rho the field is rho^gamma w(x / rho); outside the gamma-homogeneous extension
// of the trace of w.
PolarField rescaled_field(const PolarField& w, double gamma, double rho);
// The variant with |x|^gamma in place of rho^gamma inside B_rho.
PolarField rescaled_field_literal(const PolarField& w, double gamma, double rho);

// Direct polar quadrature of int_B |grad w|^2 - gamma int_dB w^2 over the half or full disk.
double weiss_quadrature(const PolarField& w, double gamma, Setting setting, PolarQuadrature q = {});

struct Slicing {
  double angular = 0.0;
  double radial = 0.0;
  double total = 0.0;
  double direct = 0.0;
};

Slicing slicing_decomposition(const PolarField& w, double gamma, Setting setting, PolarQuadrature q = {});

// Radial integrals of the truncation profile g(r) = ((r - rho)^+ / (1 - rho))^tau in dimension d:
// first = int g'^2 r^(d-1), second = int g^2 r^(d-3).
std::pair<double, double> truncation_radial_integrals(int d, double rho, double tau);
// W(T f) - W(Z f) from the two radial integrals, without cancellation against W(Z f).
double truncation_gain(int d, double gamma, double rho, double tau, double l2, double dirichlet);

struct HighModeParameters {
  double a = 0.0;
  double rho = 0.0;
  double eps2 = 0.0;
};

// Largest a in (0, 1/2] with 2^(2 gamma + 1) a^(3/2) K <= a / (d + 2 gamma - 1), found by bisection.
HighModeParameters high_mode_parameters(int d, double gamma, double ell);

struct TruncationResult {
  HighModeParameters params;
  double weiss_homogeneous = 0.0;
  double weiss_truncated = 0.0;
  double difference = 0.0;  // weiss_truncated - weiss_homogeneous
  PolarField competitor;
};

TruncationResult truncation_competitor(const SphericalTrace& f, int d, double gamma, double ell);

struct RescalingCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

RescalingCheck rescaling_identity_check(const PolarField& w, const SphericalTrace& f, double gamma, double rho,
                                        Setting setting, PolarQuadrature q = {});

// One nonnegative trace component, supported on a union of arcs.
struct TraceComponent {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::vector<std::pair<double, double>> support;

  double l2() const;
  double dirichlet() const;
  SphericalTrace coefficients(Setting setting, int j_max) const;
};

struct SegregatedTrace {
  Setting setting = Setting::half;
  std::vector<TraceComponent> components;

  double max_overlap(int samples = 4096) const;
};

// sin(pi s) exp(sum_k beta_k cos(k pi s)) on the arc [lo, hi], s = (t - lo) / (hi - lo).
TraceComponent arc_profile(double lo, double hi, double amplitude, std::vector<double> beta);

struct EpiCompetitor {
  double gamma = 0.0;
  Setting setting = Setting::half;
  std::vector<PolarField> components;
  std::vector<int> low_components;
  double weiss_z = 0.0;
  double weiss_w = 0.0;
  double difference = 0.0;  // weiss_w - weiss_z summed per component
  double achieved = 0.0;    // -difference / weiss_z when weiss_z > 0
  double eps_certified = 0.0;
  double eps_printed = 0.0;
  double first_mode_ratio = 0.0;
  bool identity = false;        // w = z
  bool harmonic_used = false;
  double trace_mismatch = 0.0;  // max |w_i - z_i| on the unit circle
  HighModeParameters params;

  bool satisfies(double eps) const { return difference <= -eps * weiss_z; }
};

// d = 2 competitor for a gamma-homogeneous segregated z with trace `z`.
EpiCompetitor build_epi_competitor(const SegregatedTrace& z, double gamma, int j_max = 64);

// Largest integral of phi_2^2 over sets of measure budget * pi in the upper half circle,
// by sorting node values.
double compute_qd_squared(double budget = 2.0 / 3.0, int nodes = 1000000);
double qd_squared_closed_form();
double delta_d(double q, int d);
double ell0(int d, double q_squared);

struct EpiConstants {
  int d = 2;
  double q_squared = 0.0;
  double delta = 0.0;
  double ell0 = 0.0;
  double eps_bd = 0.0;
  double eps_bd_printed = 0.0;
  double eps_int = 0.0;
  double gamma_at_min = 0.0;
  std::vector<double> gamma_grid;
  std::vector<double> eps_on_grid;
};

// Boundary constant as the minimum over 21 equally spaced gamma in [1, 2].
double eps_boundary(int d, double gamma, double ell);
double eps_boundary_printed(int d, double gamma, double ell);
EpiConstants certified_constants(int d = 2);

}  // namespace fblab
