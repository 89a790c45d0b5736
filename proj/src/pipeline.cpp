#include "fblab/pipeline.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>

#include "fblab/epiperimetric.hpp"
#include "json.hpp"

namespace fblab {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> r;
  for (int k = 0; k < n; ++k) r.push_back(lo * std::pow(hi / lo, k / (n - 1.0)));
  return r;
}

// exponent a point of the given class is expected to have, 0 when none
double class_exponent(const std::string& c) {
  if (c == "Z1" || c == "interface") return 1.0;
  if (c == "Z2") return 2.0;
  if (c == "junction") return 1.5;
  return 0.0;
}

double source_exponent(const std::string& source) {
  if (source == "free_point") return 2.0;
  if (source == "trace_midpoint" || source == "interface") return 1.0;
  return 0.0;
}

int expected_active(const std::string& c) {
  if (c == "Z1") return 1;
  if (c == "Z2" || c == "interface") return 2;
  if (c == "junction") return 3;
  return 0;
}

std::string point_name(std::size_t k) { return "point[" + std::to_string(k) + "]"; }

// sin-profile arcs with a random gap at the start of each arc
SegregatedTrace random_segregated(std::mt19937_64& rng, Setting setting, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double L = setting == Setting::half ? pi : 2.0 * pi;
  std::vector<double> w(n), cuts{0.0};
  double total = 0.0;
  for (auto& x : w) total += (x = 0.2 + u(rng));
  for (int i = 0; i < n; ++i) cuts.push_back(cuts.back() + L * w[i] / total);
  SegregatedTrace z;
  z.setting = setting;
  for (int i = 0; i < n; ++i) {
    const double gap = 0.15 * u(rng) * (cuts[i + 1] - cuts[i]);
    std::vector<double> beta(3);
    for (auto& b : beta) b = 0.6 * (u(rng) - 0.5);
    z.components.push_back(arc_profile(cuts[i] + gap, cuts[i + 1], 0.3 + u(rng), beta));
  }
  return z;
}

class Recorder {
 public:
  explicit Recorder(RunReport& r) : r_(r) {}
  template <class F>
  bool guard(const std::string& module, F&& f) {
    try {
      f();
      return true;
    } catch (const Error& e) {
      r_.errors.push_back({e.module(), e.what()});
    } catch (const std::exception& e) {
      r_.errors.push_back({module, e.what()});
    }
    return false;
  }

 private:
  RunReport& r_;
};

void epiperimetric_section(RunReport& R, int traces, std::uint64_t seed) {
  const EpiConstants k = certified_constants(2);
  const double q2 = compute_qd_squared();
  R.constants.push_back({"q2_squared", q2});
  R.constants.push_back({"delta_2", k.delta});
  R.constants.push_back({"ell_0", k.ell0});
  R.constants.push_back({"eps_boundary", k.eps_bd});
  R.constants.push_back({"eps_boundary_printed", k.eps_bd_printed});
  R.constants.push_back({"eps_interior", k.eps_int});
  R.checks.push_back(check_abs("epiperimetric.q2_squared", q2, qd_squared_closed_form(), 1e-4));
  R.checks.push_back(check_abs("epiperimetric.delta_2", k.delta, 0.0708, 1e-3));
  R.checks.push_back(check_abs("epiperimetric.delta_at_q0", delta_d(0.0, 2), 1.0, 0.0));
  R.checks.push_back(check_at_least("epiperimetric.eps_boundary_positive", k.eps_bd, std::numeric_limits<double>::min()));
  R.checks.push_back(check_at_least("epiperimetric.eps_interior_positive", k.eps_int, std::numeric_limits<double>::min()));
  if (traces <= 0) return;
  struct Case {
    Setting s;
    double gamma;
    const char* name;
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 4);
  for (const Case& c : {Case{Setting::half, 1.0, "half_gamma1"}, Case{Setting::half, 2.0, "half_gamma2"},
                        Case{Setting::full, 1.0, "full_gamma1"}}) {
    int good = 0;
    double worst = inf;
    for (int t = 0; t < traces; ++t) {
      const auto z = random_segregated(rng, c.s, c.s == Setting::full ? 1 + count(rng) : count(rng));
      const auto w = build_epi_competitor(z, c.gamma);
      if (w.satisfies(w.eps_certified)) ++good;
      if (w.weiss_z > 0.0) worst = std::min(worst, w.achieved);
    }
    R.checks.push_back(check_abs(std::string("epiperimetric.competitors_") + c.name, good, traces, 0.0));
    R.constants.push_back({std::string("eps_achieved_min_") + c.name, worst});
  }
}

double disk_reference(const DomainParams& d, int N, double& tolerance) {
  if (d.kind != DomainKind::disk) return 0.0;
  const double R2 = d.radius * d.radius;
  if (N == 2) {
    tolerance = 0.02;
    return 2.0 * std::pow(boost::math::cyl_bessel_j_zero(1.0, 1), 2) / R2;
  }
  if (N == 3) {
    tolerance = 0.03;
    return 3.0 * std::pow(boost::math::cyl_bessel_j_zero(1.5, 1), 2) / R2;
  }
  return 0.0;
}

std::vector<AnalysisPoint> automatic_points(const RunConfig& cfg, const Domain& D, const InterfaceGraph& g) {
  std::vector<AnalysisPoint> out;
  const double h = cfg.h;
  // the end of an interface arc locates a two-phase boundary point more sharply than the
  // middle of the unassigned boundary cluster
  for (const auto& p : g.traces.free_points) {
    Vec2 x = p.x;
    double best = 0.5 * p.width + 2.0 * h;
    for (const auto& c : g.contacts)
      if (norm(c.x - p.x) <= best) {
        best = norm(c.x - p.x);
        x = c.x;
      }
    out.push_back({x, true, "free_point"});
  }
  for (const auto& t : g.traces.traces)
    if (!t.points.empty()) out.push_back({D.project(t.points[t.points.size() / 2]).x, true, "trace_midpoint"});
  if (cfg.interior_samples <= 0) return out;
  for (const auto& a : g.arcs) {
    const double L = a.length();
    for (int s = 0; s < cfg.interior_samples; ++s) {
      const double target = L * (s + 1.0) / (cfg.interior_samples + 1.0);
      double run = 0.0;
      Vec2 x = a.points.back();
      for (std::size_t m = 1; m < a.points.size(); ++m) {
        const double seg = norm(a.points[m] - a.points[m - 1]);
        if (run + seg >= target) {
          const double t = seg > 0.0 ? (target - run) / seg : 0.0;
          x = a.points[m - 1] + t * (a.points[m] - a.points[m - 1]);
          break;
        }
        run += seg;
      }
      bool clear = -D.signed_distance(x) >= 16.0 * h;
      for (const auto& J : g.junctions) clear = clear && norm(J.x - x) >= 16.0 * h;
      if (clear) out.push_back({x, false, "interface"});
    }
  }
  return out;
}

// room around an interior point: half the distance to the boundary and to the nearest junction
double interior_room(const Domain& D, const InterfaceGraph& g, Vec2 x) {
  double room = -D.signed_distance(x);
  for (const auto& J : g.junctions) room = std::min(room, norm(J.x - x));
  return 0.5 * room;
}

}  // namespace

Check check_abs(std::string name, double measured, double target, double tolerance) {
  return {std::move(name), measured, target, tolerance, "abs", std::abs(measured - target) <= tolerance};
}

Check check_rel(std::string name, double measured, double target, double tolerance) {
  return {std::move(name), measured, target, tolerance, "rel", std::abs(measured - target) <= tolerance * std::abs(target)};
}

Check check_at_most(std::string name, double measured, double bound) {
  return {std::move(name), measured, bound, 0.0, "<=", measured <= bound};
}

Check check_at_least(std::string name, double measured, double bound) {
  return {std::move(name), measured, bound, 0.0, ">=", measured >= bound};
}

bool RunReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

int RunReport::exit_code() const {
  if (!errors.empty()) return 2;
  return all_pass() ? 0 : 1;
}

RunReport run(const RunConfig& cfg, RunArtifacts* artifacts) {
  RunReport R;
  R.source = cfg.source;
  RunArtifacts local;
  RunArtifacts& A = artifacts ? *artifacts : local;
  Recorder rec(R);

  if (cfg.epiperimetric) rec.guard("epiperimetric", [&] { epiperimetric_section(R, cfg.epi_traces, cfg.epi_seed); });
  if (!cfg.solve) return R;

  if (!rec.guard("geometry", [&] { A.domain.emplace(cfg.domain); })) return R;
  const Domain& D = *A.domain;
  const double h = cfg.h;

  if (!rec.guard("solver", [&] { A.field = minimize_partition(D, h, cfg.solver); })) return R;
  const DensityField& f = *A.field;
  R.solved = true;
  R.N = f.N();
  R.h = h;
  R.seed = f.seed;
  R.eigenvalues = f.lambda;
  R.sum_lambda = f.sum_lambda();
  R.iterations = f.iterations;

  double tol = cfg.reference_tolerance;
  double ref = cfg.reference;
  if (std::isnan(ref)) {
    double t = 0.0;
    ref = disk_reference(cfg.domain, R.N, t);
    if (std::isnan(tol)) tol = t;
  }
  if (std::isnan(tol)) tol = 0.02;
  if (ref > 0.0) {
    R.reference = ref;
    R.checks.push_back(check_rel("solver.sum_lambda", R.sum_lambda, ref, tol));
  }
  rec.guard("solver", [&] {
    const auto [sub, super] = extremality_residual(f, D.inradius());
    R.residual_sub = sub;
    R.residual_super = super;
    R.checks.push_back(check_at_most("solver.extremality_subsolution", sub, h));
    R.checks.push_back(check_at_most("solver.extremality_supersolution", super, h));
  });
  const double lip = lipschitz_estimate(f);
  R.constants.push_back({"lipschitz", lip});

  if (!rec.guard("interface", [&] { A.graph = extract_interface(f, D); })) return R;
  const InterfaceGraph& g = *A.graph;
  R.arcs = static_cast<int>(g.arcs.size());
  R.free_points = static_cast<int>(g.traces.free_points.size());
  for (std::size_t k = 0; k < g.junctions.size(); ++k)
    rec.guard("interface", [&] {
      const auto a = junction_angles(g, g.junctions[k]);
      R.junction_angles.push_back(a.angles);
      R.checks.push_back(check_at_most("interface.junction[" + std::to_string(k) + "].deviation", a.deviation, 3.0));
    });
  for (std::size_t k = 0; k < g.contacts.size(); ++k) {
    const auto a = boundary_contact_angle(g, g.contacts[k]);
    R.contact_angles.push_back(a.degrees);
    R.checks.push_back(check_at_most("interface.contact[" + std::to_string(k) + "].angle", a.degrees, 3.0));
  }
  if (cfg.refinement_check)
    rec.guard("solver", [&] {
      const auto coarse = minimize_partition(D, 2.0 * h, cfg.solver);
      R.free_points_coarse = static_cast<int>(traces_on_boundary(coarse, D).free_points.size());
      R.checks.push_back(check_abs("interface.free_point_count_refinement", R.free_points, R.free_points_coarse, 0.0));
    });

  std::vector<AnalysisPoint> points;
  if (cfg.points == PointMode::automatic) points = automatic_points(cfg, D, g);
  else if (cfg.points == PointMode::listed) points = cfg.listed;
  if (points.empty()) return R;

  const GridField G(f);
  const double R0 = straightening_radius(cfg.domain.chart_radius, R.sum_lambda);
  R.constants.push_back({"straightening_radius", R0});
  const double delta = delta_d(std::sqrt(qd_squared_closed_form()), 2);

  // chart constants at the first boundary point with a chart
  for (const auto& p : points)
    if (p.boundary && D.chart_available(p.x)) {
      rec.guard("geometry", [&] {
        const auto b = fit_coefficient_bounds(D.chart(p.x), R0);
        R.constants.push_back({"C_A", b.A_minus_I});
        R.constants.push_back({"C_b", b.beta_minus_x});
        R.constants.push_back({"kappa", b.kappa()});
      });
      break;
    }

  const double kappa_amp = amplitude_constants(ProfileKind::deg1).squared;
  R.constants.push_back({"amplitude_normalization", kappa_amp});

  A.profiles.assign(points.size(), FrequencyProfile{});
  A.rates.assign(points.size(), std::nullopt);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const AnalysisPoint& ap = points[k];
    PointReport P;
    P.x = ap.x;
    P.boundary = ap.boundary;
    P.source = ap.source;
    const std::string name = point_name(k);
    const double fmin = cfg.frequency_min_factor * h;

    std::optional<Center> fcenter, rcenter;
    double fmax = 0.0, rmax = 0.0;
    if (ap.boundary) {
      if (!D.chart_available(ap.x)) {
        P.note = "no boundary chart";
      } else {
        const auto chart = D.chart(ap.x);
        fcenter = Center::boundary(chart);
        rcenter = Center::boundary_plain(chart, D);
        fmax = R0;
        rmax = cfg.rate_max_radius;
      }
    } else {
      const double room = interior_room(D, g, ap.x);
      fcenter = rcenter = Center::interior(ap.x);
      fmax = std::min(cfg.rate_max_radius, room);
      rmax = fmax;
    }
    if (fcenter && fmax <= fmin) {
      P.note = "no room for frequency radii";
      R.checks.push_back(check_at_most("frequency." + name + ".smallest_radius", fmin, fmax));
      fcenter.reset();
    }

    if (fcenter)
      rec.guard("frequency", [&] {
        ProfileOptions opt;
        opt.weiss_gammas = {2.0};
        opt.reliable_factor = cfg.frequency_min_factor;
        A.profiles[k] = frequency_profile(G, *fcenter, geometric(fmin, fmax, cfg.frequency_radii), opt);
        const auto& prof = A.profiles[k];
        P.estimated = prof.estimated;
        P.gamma = prof.gamma_estimate;
        P.almgren_drop = prof.monotonicity_violation;
        const double t = cfg.classification_tolerance;
        if (prof.estimated) {
          if (ap.boundary) P.classification = to_string(classify_boundary_point(P.gamma, delta, t));
          else if (std::abs(P.gamma - 1.0) <= t) P.classification = "interface";
          else if (std::abs(P.gamma - 1.5) <= t) P.classification = "junction";
        }
        double target = source_exponent(ap.source);
        if (target == 0.0) target = class_exponent(P.classification);
        if (target > 0.0) {
          const double tolerance = ap.boundary ? (target == 1.0 ? 0.05 : 0.1) : t;
          R.checks.push_back(check_abs("frequency." + name + ".gamma", P.gamma, target, tolerance));
        } else {
          R.checks.push_back(check_abs("frequency." + name + ".classified", 0.0, 1.0, 0.0));
        }
        if (P.classification == "Z1" || P.classification == "Z2") {
          const auto growth = check_H_growth(prof, class_exponent(P.classification));
          if (growth.valid) P.height_limit = growth.h_limit;
        }
      });

    const double gamma = class_exponent(P.classification);
    const bool rate_kind = P.classification == "Z1" || P.classification == "Z2" || P.classification == "interface";
    if (rcenter && rate_kind && rmax > 8.0 * h * 1.0001)
      rec.guard("blowup", [&] {
        A.rates[k] = blowup_rate(G, *rcenter, geometric(8.0 * h, rmax, cfg.rate_radii), gamma, cfg.sigma0);
        const auto& rate = *A.rates[k];
        P.rate_done = true;
        P.profile = to_string(rate.profile.kind);
        P.amplitude = rate.profile.a;
        P.decay_exponent = rate.decay_exponent;
        P.required_exponent = rate.required_exponent;
        P.cauchy_constant = rate.c_cauchy_scaled;
        P.rate_constant = rate.c_rate_scaled;
        if (std::isfinite(rate.required_exponent))
          R.checks.push_back(check_at_least("blowup." + name + ".decay_exponent", rate.decay_exponent, rate.required_exponent));
        if (P.classification == "Z1" && P.height_limit > 0.0)
          R.checks.push_back(check_rel("blowup." + name + ".amplitude_normalization", P.amplitude,
                                       kappa_amp * std::sqrt(P.height_limit), 0.1));
      });

    P.expected_active = expected_active(P.classification);
    if (P.expected_active > 0)
      rec.guard("interface", [&] {
        P.cleanup_radius = std::max(P.classification == "Z2" ? cfg.cleanup_radius_z2 : cfg.cleanup_radius, 8.0 * h);
        const auto c = cleanup_check(f, D, ap.x, P.cleanup_radius);
        P.active = c.active;
        P.linear_constant = c.linear_constant;
        R.checks.push_back(check_abs("cleanup." + name + ".active", c.active, P.expected_active, 0.0));
        if (P.classification == "Z1" && P.rate_done)
          R.checks.push_back(check_at_least("cleanup." + name + ".linear_constant", c.linear_constant, 0.25 * P.amplitude));
      });
    R.points.push_back(P);
  }

  // constants fitted across points
  std::vector<const FrequencyProfile*> boundary_profiles;
  double c_weiss = 0.0, c_height = 0.0, coercivity = inf;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& prof = A.profiles[k];
    if (!points[k].boundary || prof.samples.empty()) continue;
    boundary_profiles.push_back(&prof);
    rec.guard("frequency", [&] {
      c_height = std::max(c_height, height_derivative_constant(prof));
      coercivity = std::min(coercivity, coercivity_ratio(prof));
      if (R.points[k].classification == "Z2") c_weiss = std::max(c_weiss, weiss_constant(prof, 0));
    });
  }
  if (!boundary_profiles.empty())
    rec.guard("frequency", [&] {
      const auto [C, drop] = fit_almgren_constant(boundary_profiles, 0.02);
      R.constants.push_back({"C_almgren", C});
      R.checks.push_back(check_at_most("frequency.almgren_constant", C, 100.0));
      R.checks.push_back(check_at_most("frequency.almgren_violation", drop, 0.02));
      R.constants.push_back({"C_height_derivative", c_height});
      R.constants.push_back({"coercivity_ratio", coercivity});
      R.constants.push_back({"C_W", c_weiss});
    });

  double cmin = inf, cmax = 0.0, rate_max = 0.0;
  for (const auto& P : R.points)
    if (P.boundary && P.rate_done && P.cauchy_constant > 0.0) {
      cmin = std::min(cmin, P.cauchy_constant);
      cmax = std::max(cmax, P.cauchy_constant);
      rate_max = std::max(rate_max, P.rate_constant);
    }
  if (cmax > 0.0) {
    R.constants.push_back({"C_rate", rate_max});
    R.constants.push_back({"C_cauchy", cmax});
    R.checks.push_back(check_at_most("blowup.cauchy_constant_spread", cmax / cmin, 3.0));
  }
  return R;
}

RunReport constants_report(int traces, std::uint64_t seed) {
  RunReport R;
  R.source = "constants";
  Recorder rec(R);
  rec.guard("epiperimetric", [&] { epiperimetric_section(R, traces, seed); });
  return R;
}

namespace {

nlohmann::ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return nullptr;
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

std::string RunReport::json() const {
  using J = nlohmann::ordered_json;
  J j;
  j["source"] = source;
  if (solved) {
    J s;
    s["N"] = N;
    s["h"] = h;
    s["seed"] = seed;
    s["iterations"] = iterations;
    s["eigenvalues"] = J::array();
    for (double l : eigenvalues) s["eigenvalues"].push_back(number(l));
    s["sum_lambda"] = number(sum_lambda);
    if (reference > 0.0) s["reference"] = number(reference);
    s["extremality_residual"] = {number(residual_sub), number(residual_super)};
    j["solver"] = s;
    J itf;
    itf["arcs"] = arcs;
    itf["junction_angles"] = J::array();
    for (const auto& a : junction_angles) {
      J row = J::array();
      for (double x : a) row.push_back(number(x));
      itf["junction_angles"].push_back(row);
    }
    itf["contact_angles"] = J::array();
    for (double x : contact_angles) itf["contact_angles"].push_back(number(x));
    itf["boundary_free_points"] = free_points;
    if (free_points_coarse >= 0) itf["boundary_free_points_coarse"] = free_points_coarse;
    j["interface"] = itf;
  }
  J c = J::object();
  for (const auto& [k, v] : constants) c[k] = number(v);
  j["constants"] = c;
  j["points"] = J::array();
  for (const auto& p : points) {
    J q;
    q["x"] = {number(p.x.x), number(p.x.y)};
    q["boundary"] = p.boundary;
    q["source"] = p.source;
    q["class"] = p.classification;
    q["gamma"] = number(p.gamma);
    q["almgren_drop"] = number(p.almgren_drop);
    q["height_limit"] = number(p.height_limit);
    if (p.rate_done) {
      q["profile"] = p.profile;
      q["amplitude"] = number(p.amplitude);
      q["decay_exponent"] = number(p.decay_exponent);
      q["required_exponent"] = number(p.required_exponent);
      q["cauchy_constant"] = number(p.cauchy_constant);
      q["rate_constant"] = number(p.rate_constant);
    }
    if (p.active >= 0) {
      q["cleanup_radius"] = number(p.cleanup_radius);
      q["active"] = p.active;
      q["expected_active"] = p.expected_active;
      q["linear_constant"] = number(p.linear_constant);
    }
    if (!p.note.empty()) q["note"] = p.note;
    j["points"].push_back(q);
  }
  j["checks"] = J::array();
  for (const auto& k : checks)
    j["checks"].push_back(J{{"name", k.name},
                            {"measured", number(k.measured)},
                            {"target", number(k.target)},
                            {"tolerance", number(k.tolerance)},
                            {"relation", k.relation},
                            {"pass", k.pass}});
  j["errors"] = J::array();
  for (const auto& e : errors) j["errors"].push_back(J{{"module", e.module}, {"message", e.message}});
  j["exit_code"] = exit_code();
  return j.dump(2) + "\n";
}

std::string RunReport::checks_text() const {
  std::ostringstream o;
  o << std::setprecision(6);
  for (const auto& c : checks) {
    o << (c.pass ? "PASS " : "FAIL ") << c.name << "  measured " << c.measured;
    if (c.relation == "abs") o << "  target " << c.target << " +- " << c.tolerance;
    else if (c.relation == "rel") o << "  target " << c.target << " +- " << 100.0 * c.tolerance << "%";
    else o << "  bound " << c.relation << " " << c.target;
    o << "\n";
  }
  for (const auto& e : errors) o << "ERROR [" << e.module << "] " << e.message << "\n";
  return o.str();
}

std::string RunReport::text(int verbosity) const {
  std::ostringstream o;
  o << std::setprecision(6);
  o << "fblab report: " << source << "\n";
  if (solved) {
    o << "solver: N=" << N << " h=" << h << " seed=" << seed << " sum_lambda=" << sum_lambda;
    if (reference > 0.0) o << " (reference " << reference << ")";
    o << "\n  eigenvalues:";
    for (double l : eigenvalues) o << " " << l;
    o << "\n  extremality residuals: " << residual_sub << " " << residual_super << "\n";
    o << "interface: " << arcs << " arcs, " << junction_angles.size() << " junctions, " << contact_angles.size()
      << " contacts, " << free_points << " boundary free points\n";
  }
  if (!constants.empty()) {
    o << "constants:\n";
    for (const auto& [k, v] : constants) o << "  " << k << " = " << v << "\n";
  }
  if (verbosity >= 2 && !points.empty()) {
    o << "points:\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto& p = points[k];
      o << "  [" << k << "] (" << p.x.x << ", " << p.x.y << ") " << p.source << " class " << p.classification
        << " gamma " << p.gamma;
      if (p.rate_done) o << " a " << p.amplitude << " exponent " << p.decay_exponent << " cauchy " << p.cauchy_constant;
      if (p.active >= 0) o << " active " << p.active << "/" << p.expected_active;
      if (!p.note.empty()) o << " (" << p.note << ")";
      o << "\n";
    }
  }
  if (verbosity >= 1) o << "checks:\n" << checks_text();
  const auto failed = std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.pass; });
  o << "summary: " << checks.size() - failed << "/" << checks.size() << " checks pass, " << errors.size()
    << " errors, exit " << exit_code() << "\n";
  return o.str();
}

std::vector<std::string> emit_figures(const RunReport& report, const RunArtifacts& A, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cli", "cannot create '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cli", "cannot open '" + path + "': " + std::strerror(errno));
    out << content;
    out.close();
    if (!out) throw Error("cli", "cannot write '" + path + "': " + std::strerror(errno));
    written.push_back(path);
  };
  if (A.field && A.graph && A.domain) {
    put("partition.svg", interface_svg(*A.field, *A.domain, *A.graph));
    put("interface.csv", A.graph->csv());
  }
  for (std::size_t k = 0; k < A.profiles.size(); ++k)
    if (!A.profiles[k].samples.empty()) put("frequency_" + std::to_string(k) + ".csv", A.profiles[k].csv());
  for (std::size_t k = 0; k < A.rates.size(); ++k)
    if (A.rates[k]) put("rate_" + std::to_string(k) + ".csv", A.rates[k]->csv());
  put("report.json", report.json());
  put("report.txt", report.text(2));
  return written;
}

}  // namespace fblab
