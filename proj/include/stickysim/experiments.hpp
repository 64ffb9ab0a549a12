#pragma once

// Named experiments that write CSV data plus a JSON summary, and the
// CSV comparison used to check simulation output against theory.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stickysim/config.hpp"

namespace stickysim {

/// Version string recorded in every summary ("0.1.0-<git describe>").
const char* version();

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::vector<std::string> tags;
};

/// Stable, ordered catalog.
const std::vector<ExperimentInfo>& experiment_catalog();

/// Entries whose name or tags contain `filter` (all entries when empty).
std::vector<ExperimentInfo> list_experiments(std::string_view filter = {});

struct ExperimentSpec {
  std::string name;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  ParamMap params;
};

struct ExperimentResult {
  std::vector<std::filesystem::path> files;  // CSVs, then summary.json
  std::string summary_json;
};

/// Throws ValidationError for unknown experiments or parameters and
/// NumericalError when a solver fails.
ExperimentResult run_experiment(const ExperimentSpec& spec);

struct CompareOptions {
  double tol = 0.05;
  /// Probability columns; empty picks p_empirical, p_theory, p, or the
  /// second column, in that order.
  std::string column_a;
  std::string column_b;
};

struct CompareReport {
  std::string column_a;
  std::string column_b;
  std::size_t rows_a = 0;
  std::size_t rows_b = 0;
  double mass_a = 0.0;
  double mass_b = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double mean_gap = 0.0;  // mean_b - mean_a
  double tv = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Total variation between two occupancy CSVs keyed by an integer `i`
/// column. Index ranges may differ (missing levels count as 0). Throws
/// ValidationError when a file is malformed.
CompareReport compare_csv(const std::filesystem::path& a, const std::filesystem::path& b,
                          const CompareOptions& options = {});

std::string format_report(const CompareReport& report);

}  // namespace stickysim
