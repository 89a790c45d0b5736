#include <algorithm>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fblab/pipeline.hpp"

using namespace fblab;

namespace {

int do_run(const std::string& path, const std::string& out_override, bool quiet) {
  RunConfig cfg = load_run_config(path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  RunArtifacts artifacts;
  RunReport report = run(cfg, &artifacts);
  try {
    const auto files = emit_figures(report, artifacts, cfg.output_dir);
    if (!quiet && cfg.verbosity >= 1) std::cout << "wrote " << files.size() << " files to " << cfg.output_dir << "\n";
  } catch (const Error& e) {
    report.errors.push_back({e.module(), e.what()});
  }
  if (!quiet) std::cout << report.text(cfg.verbosity);
  for (const auto& e : report.errors) std::cerr << "error [" << e.module << "] " << e.message << "\n";
  return report.exit_code();
}

int do_check(const std::string& path) {
  RunConfig cfg = load_run_config(path);
  cfg.figures = false;
  const RunReport report = run(cfg);
  std::cout << report.checks_text();
  const auto failed = std::count_if(report.checks.begin(), report.checks.end(), [](const Check& c) { return !c.pass; });
  std::cout << report.checks.size() - failed << "/" << report.checks.size() << " checks pass\n";
  return report.exit_code();
}

int do_constants(int traces, std::uint64_t seed, bool json) {
  const RunReport report = constants_report(traces, seed);
  std::cout << (json ? report.json() : report.text(1));
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"free-boundary partition lab"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "solve, analyse and write the report and figures");
  run_cmd->add_option("config", cfg_path, "configuration file")->required();
  run_cmd->add_option("-o,--out", out_dir, "output directory, overrides output.dir");
  run_cmd->add_flag("-q,--quiet", quiet, "print nothing on success");

  std::string check_path;
  auto* check_cmd = app.add_subcommand("check", "run the acceptance checks of a configuration without writing files");
  check_cmd->add_option("config", check_path, "configuration file")->required();

  int traces = 0;
  std::uint64_t seed = 1;
  bool json = false;
  auto* const_cmd = app.add_subcommand("constants", "print the epiperimetric constants");
  const_cmd->add_option("--traces", traces, "randomized competitor checks per setting")->check(CLI::Range(0, 100000));
  const_cmd->add_option("--seed", seed, "seed of the randomized traces");
  const_cmd->add_flag("--json", json, "print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return do_run(cfg_path, out_dir, quiet);
    if (*check_cmd) return do_check(check_path);
    if (*const_cmd) return do_constants(traces, seed, json);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
