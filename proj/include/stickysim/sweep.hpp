#pragma once

// Batch kernels over independent work items. Each has a serial reference
// path and an OpenMP path; both write results by item index, so their
// output is bitwise identical.

#include <cstddef>
#include <span>
#include <vector>

#include "stickysim/bin_sim.hpp"
#include "stickysim/flow_sim.hpp"
#include "stickysim/mean_field.hpp"
#include "stickysim/metrics.hpp"

namespace stickysim::sweep {

enum class Execution { Serial, Parallel };

/// Worker threads the parallel path would use (1 without OpenMP).
int max_threads();

std::vector<SimStats> run_flow_sims(std::span<const SimConfig> configs,
                                    Execution exec = Execution::Parallel);
std::vector<BinSimStats> run_bin_sims(std::span<const SimConfig> configs,
                                      Execution exec = Execution::Parallel);

struct ConsistencyCell {
  int h = 0;
  double chi = 0.0;
  double closed_form = 0.0;  // shedding_tail
  double aggregated = 0.0;   // g_tilde on the truncated Poisson
  [[nodiscard]] double gap() const;
};

/// shedding_tail against g_tilde(shedding_fixed_point) on the h x chi grid.
std::vector<ConsistencyCell> shedding_consistency_grid(std::span<const int> h_values,
                                                       std::span<const double> chis,
                                                       const SystemParams& params,
                                                       Execution exec = Execution::Parallel);

struct PullGridPoint {
  double rho = 0.0;
  int l = 0;
  Threshold h = Threshold::infinite();
};

/// Fixed-point residual of the pull-based solver at each point.
std::vector<double> pull_residual_grid(std::span<const PullGridPoint> points,
                                       Execution exec = Execution::Parallel);

}  // namespace stickysim::sweep
