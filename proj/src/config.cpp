#include "fblab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

namespace fblab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct BadValue {
  std::string what;
};

double to_double(const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) throw BadValue{"expected a number, got '" + v + "'"};
  return x;
}

long long to_integer(const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw BadValue{"expected an integer, got '" + v + "'"};
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw BadValue{"expected true or false, got '" + v + "'"};
}

double positive(const std::string& v) {
  const double x = to_double(v);
  if (!(x > 0.0)) throw BadValue{"expected a positive number, got '" + v + "'"};
  return x;
}

int int_in(const std::string& v, long long lo, long long hi) {
  const long long x = to_integer(v);
  if (x < lo || x > hi) throw BadValue{"expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got '" + v + "'"};
  return static_cast<int>(x);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) out.push_back(trim(part));
  return out;
}

std::vector<AnalysisPoint> parse_points(const std::string& v) {
  std::vector<AnalysisPoint> out;
  for (const auto& item : split(v, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw BadValue{"point '" + item + "' needs the form boundary:x,y or interior:x,y"};
    const std::string kind = trim(item.substr(0, colon));
    AnalysisPoint p;
    if (kind == "boundary") p.boundary = true;
    else if (kind == "interior") p.boundary = false;
    else throw BadValue{"unknown point kind '" + kind + "'"};
    const auto xy = split(item.substr(colon + 1), ',');
    if (xy.size() != 2) throw BadValue{"point '" + item + "' needs two coordinates"};
    p.x = {to_double(xy[0]), to_double(xy[1])};
    p.source = "listed";
    out.push_back(p);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"domain.kind",
       [](RunConfig& c, const std::string& v) {
         if (v == "disk") c.domain.kind = DomainKind::disk;
         else if (v == "rounded_rectangle") c.domain.kind = DomainKind::rounded_rectangle;
         else if (v == "epigraph") c.domain.kind = DomainKind::epigraph;
         else throw BadValue{"unknown domain kind '" + v + "'"};
       }},
      {"domain.radius", [](RunConfig& c, const std::string& v) { c.domain.radius = positive(v); }},
      {"domain.width", [](RunConfig& c, const std::string& v) { c.domain.width = positive(v); }},
      {"domain.height", [](RunConfig& c, const std::string& v) { c.domain.height = positive(v); }},
      {"domain.corner_radius", [](RunConfig& c, const std::string& v) { c.domain.corner_radius = positive(v); }},
      {"domain.graph_amplitude", [](RunConfig& c, const std::string& v) { c.domain.graph_amplitude = to_double(v); }},
      {"domain.graph_exponent", [](RunConfig& c, const std::string& v) { c.domain.graph_exponent = positive(v); }},
      {"domain.half_width", [](RunConfig& c, const std::string& v) { c.domain.half_width = positive(v); }},
      {"domain.top", [](RunConfig& c, const std::string& v) { c.domain.top = positive(v); }},
      {"domain.chart_radius", [](RunConfig& c, const std::string& v) { c.domain.chart_radius = positive(v); }},

      {"solver.enabled", [](RunConfig& c, const std::string& v) { c.solve = to_bool(v); }},
      {"solver.N", [](RunConfig& c, const std::string& v) { c.solver.N = int_in(v, 1, 12); }},
      {"solver.h", [](RunConfig& c, const std::string& v) { c.h = positive(v); }},
      {"solver.seed",
       [](RunConfig& c, const std::string& v) { c.solver.seed = static_cast<std::uint64_t>(int_in(v, 0, 1LL << 31)); }},
      {"solver.levels", [](RunConfig& c, const std::string& v) { c.solver.levels = int_in(v, 1, 6); }},
      {"solver.sweeps", [](RunConfig& c, const std::string& v) { c.solver.sweeps = int_in(v, 1, 100000); }},
      {"solver.inner_iterations", [](RunConfig& c, const std::string& v) { c.solver.inner_iterations = int_in(v, 1, 100000); }},
      {"solver.retries", [](RunConfig& c, const std::string& v) { c.solver.retries = int_in(v, 1, 100); }},
      {"solver.tolerance", [](RunConfig& c, const std::string& v) { c.solver.tolerance = positive(v); }},
      {"solver.reference", [](RunConfig& c, const std::string& v) { c.reference = positive(v); }},
      {"solver.reference_tolerance", [](RunConfig& c, const std::string& v) { c.reference_tolerance = positive(v); }},

      {"moduli.sigma0",
       [](RunConfig& c, const std::string& v) {
         // power c alpha  or  log_power c beta
         const auto parts = split(v, ' ');
         std::vector<std::string> w;
         for (const auto& p : parts)
           if (!p.empty()) w.push_back(p);
         if (w.size() != 3) throw BadValue{"expected 'power c alpha' or 'log_power c beta'"};
         if (w[0] == "power") c.sigma0 = Modulus::power(to_double(w[1]), positive(w[2]), 1.0);
         else if (w[0] == "log_power") c.sigma0 = Modulus::log_power(to_double(w[1]), positive(w[2]), 0.5);
         else throw BadValue{"unknown modulus '" + w[0] + "'"};
       }},

      {"analysis.points",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") c.points = PointMode::automatic;
         else if (v == "none" || v.empty()) c.points = PointMode::none;
         else {
           c.points = PointMode::listed;
           c.listed = parse_points(v);
         }
       }},
      {"analysis.interior_samples", [](RunConfig& c, const std::string& v) { c.interior_samples = int_in(v, 0, 16); }},
      {"analysis.frequency_radii", [](RunConfig& c, const std::string& v) { c.frequency_radii = int_in(v, 4, 64); }},
      {"analysis.frequency_min_factor", [](RunConfig& c, const std::string& v) { c.frequency_min_factor = positive(v); }},
      {"analysis.rate_radii", [](RunConfig& c, const std::string& v) { c.rate_radii = int_in(v, 3, 64); }},
      {"analysis.rate_max_radius", [](RunConfig& c, const std::string& v) { c.rate_max_radius = positive(v); }},
      {"analysis.cleanup_radius", [](RunConfig& c, const std::string& v) { c.cleanup_radius = positive(v); }},
      {"analysis.cleanup_radius_z2", [](RunConfig& c, const std::string& v) { c.cleanup_radius_z2 = positive(v); }},
      {"analysis.classification_tolerance",
       [](RunConfig& c, const std::string& v) { c.classification_tolerance = positive(v); }},
      {"analysis.refinement_check", [](RunConfig& c, const std::string& v) { c.refinement_check = to_bool(v); }},

      {"epiperimetric.enabled", [](RunConfig& c, const std::string& v) { c.epiperimetric = to_bool(v); }},
      {"epiperimetric.traces", [](RunConfig& c, const std::string& v) { c.epi_traces = int_in(v, 0, 100000); }},
      {"epiperimetric.seed",
       [](RunConfig& c, const std::string& v) { c.epi_seed = static_cast<std::uint64_t>(int_in(v, 0, 1LL << 31)); }},

      {"output.dir",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) throw BadValue{"empty output directory"};
         c.output_dir = v;
       }},
      {"output.verbosity", [](RunConfig& c, const std::string& v) { c.verbosity = int_in(v, 0, 2); }},
      {"output.figures", [](RunConfig& c, const std::string& v) { c.figures = to_bool(v); }},
  };
  return table;
}

}  // namespace

ConfigFile parse_config(const std::string& text, const std::string& source) {
  ConfigFile out;
  out.source = source;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected 'section.key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const auto dot = key.find('.');
    if (key.empty() || dot == std::string::npos || dot == 0 || dot + 1 == key.size() || key.find(' ') != std::string::npos)
      throw ConfigError(source, line, "key '" + key + "' must have the form section.key");
    if (out.entries.count(key))
      throw ConfigError(source, line, "duplicate key '" + key + "' (first set on line " + std::to_string(out.entries[key].line) + ")");
    out.entries[key] = {value, line};
  }
  return out;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

RunConfig make_run_config(const ConfigFile& file) {
  RunConfig c;
  c.source = file.source;
  const auto& table = setters();
  for (const auto& [key, entry] : file.entries) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(file.source, entry.line, "unknown key '" + key + "'");
    try {
      it->second(c, entry.value);
    } catch (const BadValue& e) {
      throw ConfigError(file.source, entry.line, key + ": " + e.what);
    } catch (const Error& e) {
      throw ConfigError(file.source, entry.line, key + ": " + e.what());
    }
  }

  auto line_of = [&](const std::string& key) {
    auto it = file.entries.find(key);
    if (it == file.entries.end()) it = file.entries.find("solver.h");
    return it == file.entries.end() ? 0 : it->second.line;
  };
  auto fail = [&](const std::string& key, const std::string& what) { throw ConfigError(file.source, line_of(key), what); };

  if (!c.solve) {
    if (c.points != PointMode::automatic && c.points != PointMode::none)
      fail("analysis.points", "analysis points need the solver");
    c.points = PointMode::none;
    return c;
  }
  if (c.h > 0.25) fail("solver.h", "grid spacing " + std::to_string(c.h) + " is too coarse");
  const double floor = 8.0 * c.h;
  if (std::isnan(c.rate_max_radius)) c.rate_max_radius = std::max(0.2, 24.0 * c.h);
  if (std::isnan(c.cleanup_radius)) c.cleanup_radius = std::max(0.1, floor);
  if (std::isnan(c.cleanup_radius_z2)) c.cleanup_radius_z2 = std::max(0.3 * std::sqrt(128.0 * c.h), floor);
  if (c.cleanup_radius < floor * (1.0 - 1e-12)) fail("analysis.cleanup_radius", "clean-up radius below 8h");
  if (c.cleanup_radius_z2 < floor * (1.0 - 1e-12)) fail("analysis.cleanup_radius_z2", "clean-up radius below 8h");
  if (c.rate_max_radius <= floor) fail("analysis.rate_max_radius", "largest rate radius must exceed 8h");

  std::unique_ptr<Domain> domain;
  try {
    domain = std::make_unique<Domain>(c.domain);
  } catch (const Error& e) {
    fail("domain.kind", e.what());
  }
  const double scale = std::max(domain->upper().x - domain->lower().x, domain->upper().y - domain->lower().y);
  if (c.rate_max_radius > scale) fail("analysis.rate_max_radius", "largest rate radius exceeds the domain size");
  for (const auto& p : c.listed) {
    const double sd = domain->signed_distance(p.x);
    if (p.boundary && std::abs(sd) > 1e-9 * scale)
      fail("analysis.points", "point (" + std::to_string(p.x.x) + ", " + std::to_string(p.x.y) + ") is not on the boundary");
    if (!p.boundary && !(sd < 0.0))
      fail("analysis.points", "point (" + std::to_string(p.x.x) + ", " + std::to_string(p.x.y) + ") is not inside the domain");
  }
  return c;
}

RunConfig load_run_config(const std::string& path) { return make_run_config(load_config(path)); }

}  // namespace fblab
