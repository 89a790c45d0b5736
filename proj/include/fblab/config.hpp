#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fblab/error.hpp"
#include "fblab/geometry.hpp"
#include "fblab/moduli.hpp"
#include "fblab/solver.hpp"

namespace fblab {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : Error("config", source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// Flat `section.key = value` file. `#` starts a comment; blank lines are ignored.
struct ConfigEntry {
  std::string value;
  int line = 0;
};

struct ConfigFile {
  std::string source;
  std::map<std::string, ConfigEntry> entries;
};

ConfigFile parse_config(const std::string& text, const std::string& source = "config");
ConfigFile load_config(const std::string& path);

enum class PointMode { automatic, none, listed };

struct AnalysisPoint {
  Vec2 x;
  bool boundary = true;
  std::string source;  // free_point, trace_midpoint, interface, listed
};

struct RunConfig {
  std::string source;
  bool solve = true;
  DomainParams domain;
  double h = 1.0 / 64;
  SolverConfig solver;
  Modulus sigma0 = Modulus::power(1.0, 1.0, 1.0);

  PointMode points = PointMode::automatic;
  std::vector<AnalysisPoint> listed;
  int interior_samples = 1;        // per interface arc
  int frequency_radii = 8;
  double frequency_min_factor = 4.0;  // smallest frequency radius, in h
  int rate_radii = 8;
  // NaN radii take the defaults max(0.2, 24h), max(0.1, 8h) and max(0.3 sqrt(128 h), 8h); the
  // last one grows like sqrt(h) because components vanish quadratically at two-phase contacts
  double rate_max_radius = std::numeric_limits<double>::quiet_NaN();
  double cleanup_radius = std::numeric_limits<double>::quiet_NaN();
  double cleanup_radius_z2 = std::numeric_limits<double>::quiet_NaN();
  double classification_tolerance = 0.1;
  bool refinement_check = false;   // also solve at 2h and compare boundary free point counts

  bool epiperimetric = true;
  int epi_traces = 0;              // randomized competitor checks per setting
  std::uint64_t epi_seed = 1;

  // reference value for the eigenvalue sum; NaN picks the disk Bessel value when known
  double reference = std::numeric_limits<double>::quiet_NaN();
  double reference_tolerance = std::numeric_limits<double>::quiet_NaN();

  std::string output_dir = "fblab_out";
  int verbosity = 1;
  bool figures = true;
};

RunConfig make_run_config(const ConfigFile& file);
RunConfig load_run_config(const std::string& path);

}  // namespace fblab
