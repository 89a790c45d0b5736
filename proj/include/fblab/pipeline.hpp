#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fblab/blowup.hpp"
#include "fblab/config.hpp"
#include "fblab/frequency.hpp"
#include "fblab/interface.hpp"

namespace fblab {

struct Check {
  std::string name;
  double measured = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "abs", "rel", "<=", ">="
  bool pass = false;
};

// pass when |measured - target| <= tolerance
Check check_abs(std::string name, double measured, double target, double tolerance);
// pass when |measured - target| <= tolerance |target|
Check check_rel(std::string name, double measured, double target, double tolerance);
Check check_at_most(std::string name, double measured, double bound);
Check check_at_least(std::string name, double measured, double bound);

struct ModuleError {
  std::string module;
  std::string message;
};

struct PointReport {
  Vec2 x;
  bool boundary = true;
  std::string source;
  std::string classification = "unknown";  // Z1, Z2, S, interface, junction, unknown
  double gamma = 0.0;
  bool estimated = false;
  double almgren_drop = 0.0;
  double height_limit = 0.0;  // H(r)/r^(2 gamma) as r -> 0
  bool rate_done = false;
  std::string profile;
  double amplitude = 0.0;
  double decay_exponent = 0.0;
  double required_exponent = 0.0;
  double cauchy_constant = 0.0;  // scale-free Cauchy constant
  double rate_constant = 0.0;
  int expected_active = 0;
  int active = -1;
  double cleanup_radius = 0.0;
  double linear_constant = 0.0;
  std::string note;
};

struct RunReport {
  std::string source;
  bool solved = false;
  int N = 0;
  double h = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> eigenvalues;
  double sum_lambda = 0.0;
  double reference = 0.0;  // 0 when unknown
  double residual_sub = 0.0;
  double residual_super = 0.0;
  int iterations = 0;
  int arcs = 0;
  std::vector<std::vector<double>> junction_angles;
  std::vector<double> contact_angles;
  int free_points = 0;
  int free_points_coarse = -1;

  // fitted constants, each once
  std::vector<std::pair<std::string, double>> constants;
  std::vector<PointReport> points;
  std::vector<Check> checks;
  std::vector<ModuleError> errors;

  int exit_code() const;  // 2 on any error, 1 on any failed check, else 0
  bool all_pass() const;
  std::string json() const;
  std::string text(int verbosity = 1) const;
  std::string checks_text() const;
};

struct RunArtifacts {
  std::optional<Domain> domain;
  std::optional<DensityField> field;
  std::optional<InterfaceGraph> graph;
  std::vector<FrequencyProfile> profiles;  // one per analysis point, empty samples when skipped
  std::vector<std::optional<BlowupRate>> rates;
};

RunReport run(const RunConfig& config, RunArtifacts* artifacts = nullptr);

// Epiperimetric constants without a PDE solve.
RunReport constants_report(int traces = 0, std::uint64_t seed = 1);

// partition.svg, interface.csv, frequency_<k>.csv, rate_<k>.csv, report.json, report.txt.
// Returns the written paths.
std::vector<std::string> emit_figures(const RunReport& report, const RunArtifacts& artifacts, const std::string& dir);

}  // namespace fblab
