#include "stickysim/sweep.hpp"

#include <cmath>
#include <exception>

#ifdef STICKYSIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace stickysim::sweep {

namespace {

// Runs body(i) for i in [0, count). Exceptions are captured per item and the
// lowest-index one is rethrown, so failures do not depend on scheduling.
template <class Body>
void for_each_index(std::size_t count, Execution exec, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  const auto total = static_cast<long>(count);
  if (exec == Execution::Serial) {
    for (long i = 0; i < total; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < total; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

int max_threads() {
#ifdef STICKYSIM_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<SimStats> run_flow_sims(std::span<const SimConfig> configs, Execution exec) {
  std::vector<SimStats> out(configs.size());
  for_each_index(configs.size(), exec, [&](std::size_t i) { out[i] = run_flow_sim(configs[i]); });
  return out;
}

std::vector<BinSimStats> run_bin_sims(std::span<const SimConfig> configs, Execution exec) {
  std::vector<BinSimStats> out(configs.size());
  for_each_index(configs.size(), exec, [&](std::size_t i) { out[i] = run_bin_sim(configs[i]); });
  return out;
}

double ConsistencyCell::gap() const { return std::abs(closed_form - aggregated); }

std::vector<ConsistencyCell> shedding_consistency_grid(std::span<const int> h_values,
                                                       std::span<const double> chis,
                                                       const SystemParams& params,
                                                       Execution exec) {
  std::vector<ConsistencyCell> out(h_values.size() * chis.size());
  for_each_index(out.size(), exec, [&](std::size_t k) {
    auto& cell = out[k];
    cell.h = h_values[k / chis.size()];
    cell.chi = chis[k % chis.size()];
    const auto h = Threshold::finite(cell.h);
    cell.closed_form = shedding_tail(h, cell.chi, params);
    cell.aggregated = g_tilde(mean_field::shedding_fixed_point(params.rho(), h),
                              g_chi_fn(cell.chi, params));
  });
  return out;
}

std::vector<double> pull_residual_grid(std::span<const PullGridPoint> points, Execution exec) {
  std::vector<double> out(points.size());
  for_each_index(points.size(), exec, [&](std::size_t i) {
    const auto& p = points[i];
    const auto fp = mean_field::solve_pull_fixed_point(p.rho, p.l, p.h);
    out[i] = mean_field::fixed_point_residual(scheme::PullBased{p.l, p.h}, fp.dist, p.rho);
  });
  return out;
}

}  // namespace stickysim::sweep
