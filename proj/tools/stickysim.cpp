// stickysim: run named experiments, compare occupancy CSVs, list the catalog.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure,
// 3 comparison above tolerance.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "stickysim/experiments.hpp"

namespace {

constexpr int kValidation = 1;
constexpr int kNumerical = 2;
constexpr int kThreshold = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace stickysim;

  CLI::App app{"Flow-stickiness load balancing: mean-field solvers and simulators"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  std::string experiment;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::string chi;
  std::string bins;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a named experiment");
  run->add_option("experiment", experiment, "Experiment name (see `list`)")->required();
  run->add_option("--seed", seed, "Random seed")->capture_default_str();
  run->add_option("--out", out_dir, "Output directory (default out/<experiment>)");
  run->add_option("--param", overrides, "Parameter override key=value (repeatable)");
  run->add_option("--chi", chi, "Shorthand for --param chi=...");
  run->add_option("--bins", bins, "Shorthand for --param bins=... (e.g. 2n,5n,10n)");
  run->add_option("--config", config_path, "Key-value config file with per-experiment sections");

  std::string file_a;
  std::string file_b;
  CompareOptions cmp;
  auto* compare = app.add_subcommand("compare", "Total variation between two occupancy CSVs");
  compare->add_option("a", file_a, "Reference CSV (e.g. theory)")->required();
  compare->add_option("b", file_b, "Candidate CSV (e.g. simulation)")->required();
  compare->add_option("--tol", cmp.tol, "Pass threshold on total variation")->capture_default_str();
  compare->add_option("--column-a", cmp.column_a, "Probability column in the first file");
  compare->add_option("--column-b", cmp.column_b, "Probability column in the second file");

  std::string filter;
  auto* list = app.add_subcommand("list", "List experiments");
  list->add_option("--filter", filter, "Substring of a name or tag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }

  try {
    if (*list) {
      for (const auto& info : list_experiments(filter)) {
        std::printf("%-22s %s\n", info.name.c_str(), info.description.c_str());
      }
      return 0;
    }
    if (*compare) {
      const auto report = compare_csv(file_a, file_b, cmp);
      std::cout << format_report(report);
      return report.pass ? 0 : kThreshold;
    }
    ExperimentSpec spec;
    spec.name = experiment;
    spec.seed = seed;
    spec.out_dir = out_dir.empty() ? std::filesystem::path("out") / experiment
                                  : std::filesystem::path(out_dir);
    if (!config_path.empty()) spec.params = load_config(config_path).for_experiment(experiment);
    if (!chi.empty()) spec.params["chi"] = chi;
    if (!bins.empty()) spec.params["bins"] = bins;
    for (const auto& kv : overrides) apply_override(spec.params, kv);
    const auto result = run_experiment(spec);
    for (const auto& f : result.files) std::cout << f.string() << '\n';
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
}
