#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace fblab {

enum class ModulusKind { power, log_power, tabulated, smoothed };

namespace detail {
struct SmoothedTable;
}

// Modulus of continuity sigma on [0, r_max]. Evaluations at tiny radii go through
// at_log(s) = sigma(e^-s), so the integrands near t = 0 never underflow.
class Modulus {
 public:
  // c * r^alpha
  static Modulus power(double coefficient, double exponent, double r_max = 1.0);
  // c * |log r|^-beta, defined for r < 1
  static Modulus log_power(double coefficient, double exponent, double r_max = 0.5);
  // log-linear interpolation between (radius, value) samples; linear below the first sample
  static Modulus tabulated(std::vector<double> radii, std::vector<double> values);

  double operator()(double r) const;
  double at_log(double s) const;
  // log sigma(e^-s); finite far beyond the underflow range of at_log for power moduli
  double log_at_log(double s) const;
  // values of s = -log r where the modulus has kinks (tabulated samples)
  std::vector<double> log_breakpoints() const;
  double derivative(double r) const;
  double second_derivative(double r) const;

  ModulusKind kind() const { return kind_; }
  double r_max() const { return r_max_; }
  double coefficient() const { return coefficient_; }
  double exponent() const { return exponent_; }
  bool is_zero() const { return kind_ != ModulusKind::tabulated && kind_ != ModulusKind::smoothed && coefficient_ == 0.0; }
  // True when sigma is C^2 away from 0 with |s'| <= 2s/r, |s''| <= 4s/r^2 and s/r nonincreasing.
  bool regular() const;

 private:
  friend Modulus smooth_modulus(const Modulus& f);
  ModulusKind kind_ = ModulusKind::power;
  double coefficient_ = 0.0;
  double exponent_ = 1.0;
  double r_max_ = 1.0;
  std::vector<double> log_r_, log_v_;
  std::shared_ptr<const detail::SmoothedTable> smooth_;
};

struct DiniValue {
  double value = 0.0;
  bool divergent = false;
};

// D^0 = sigma, D^j(r) = int_0^r D^(j-1)(t)/t dt.
DiniValue iterated_dini(const Modulus& sigma, double r, int depth);
// int_0^r sigma(t) |log t|^eps / t dt
DiniValue weighted_dini(const Modulus& sigma, double r, double log_weight);
// depth >= 1: iterated integral (log_weight must be 0); depth == 0: weighted integral.
DiniValue dini_integral(const Modulus& sigma, double r, int depth, double log_weight = 0.0);

// (finiteness of int_0^R f |log r|^(n+eps)/r, finiteness of int_0^R D^n_f |log r|^eps / r)
std::pair<bool, bool> check_alpha_dini_equivalence(const Modulus& f, int n, double eps, double R);

// h1(r) = r sup_[r,R] f/t followed by two passes of h -> 2 int_{r/2}^r h(t)/t dt.
Modulus smooth_modulus(const Modulus& f);

// 3(sigma + r sigma'); refuses moduli that are not regular.
double alpha_of_sigma(const Modulus& sigma, double r);
double alpha_derivative(const Modulus& sigma, double r);

struct RegularityReport {
  double max_first = 0.0;       // max r|s'|/s, bound 2
  double max_second = 0.0;      // max r^2|s''|/s, bound 4
  double max_ratio_slope = 0.0; // max r s'/s - 1, bound 0
  double min_alpha_lower = 0.0; // min alpha/(3s), bound 1
  double max_alpha_upper = 0.0; // max alpha/(6s), bound 1
  double max_alpha_slope = 0.0; // max r|alpha'|/(24 s), bound 1
  bool ok() const;
};

RegularityReport check_regularity(const Modulus& sigma, double r_min, double r_max, int samples = 1000);

struct DiniReport {
  double double_dini = 0.0;  // int_0^{2R} (1/(r s0)) int_0^r s/t dt dr
  bool double_divergent = false;
  double sigma0_dini = 0.0;  // int_0^{2R} s0/t
  bool sigma0_divergent = false;
  bool power_condition = false;  // (r^-m s0)' <= 0 on the sample grid
  bool admissible = false;
  std::function<DiniValue(double)> dini;  // r -> int_0^r s/t
};

DiniReport dini_report(const Modulus& sigma, const Modulus& sigma0, double R, double m_d);

struct ModulusRelations {
  double nondegeneracy = 0.0;      // min s(r)/r over the grid
  double max_sigma_over_dini = 0.0; // max s(r) / int_0^r s/t, bound 1
  double c_sigma0 = 0.0;           // (1/4) int_0^{2R} s/(t s0)
  double max_sigma_over_c_dini0 = 0.0; // max s(r) / (C_s0 int_0^r s0/t), bound 1
  double c_tilde = 0.0;            // s0(2R) / (m (2R)^m)
  double min_dini0_over_power = 0.0;    // min int_0^r s0/t / (C~ r^m), bound 1
};

ModulusRelations check_relations(const Modulus& sigma, const Modulus& sigma0, double R, double m_d, int samples = 60);

double upsilon(const Modulus& sigma0, double r);
// theta(s) = (int_0^{Upsilon^-1(s)} s0/t)^(1/2)
double theta(const Modulus& sigma0, double s);
std::pair<double, double> upsilon_theta(const Modulus& sigma0, double r);

}  // namespace fblab
