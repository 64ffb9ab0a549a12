#include <gtest/gtest.h>

#include "stickysim/sweep.hpp"

using namespace stickysim;
using sweep::Execution;

namespace {

std::vector<SimConfig> replicas(SchemeConfig sc, std::size_t count) {
  std::vector<SimConfig> out;
  for (std::size_t k = 0; k < count; ++k) {
    SimConfig c;
    c.params.n = 30;
    c.scheme = sc;
    c.seed = 100 + k;
    c.warmup = 5.0 * c.params.beta;
    c.horizon = 10.0 * c.params.beta;
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST(Sweep, FlowSimsSerialEqualsParallel) {
  const auto configs = replicas(scheme::PullBased{140, Threshold::finite(160)}, 4);
  const auto a = sweep::run_flow_sims(configs, Execution::Serial);
  const auto b = sweep::run_flow_sims(configs, Execution::Parallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].occupancy_hist, b[k].occupancy_hist);
    EXPECT_EQ(a[k].series, b[k].series);
    EXPECT_EQ(a[k].events, b[k].events);
  }
  EXPECT_NE(a[0].occupancy_hist, a[1].occupancy_hist);
}

TEST(Sweep, BinSimsSerialEqualsParallel) {
  const auto configs = replicas(scheme::BinBased{300, 140, Threshold::finite(160)}, 3);
  const auto a = sweep::run_bin_sims(configs, Execution::Serial);
  const auto b = sweep::run_bin_sims(configs, Execution::Parallel);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].occupancy_hist, b[k].occupancy_hist);
    EXPECT_EQ(a[k].reallocations, b[k].reallocations);
  }
}

TEST(Sweep, ConsistencyGridSerialEqualsParallel) {
  const std::vector<int> hs = {1, 50, 150, 160, 200};
  const std::vector<double> chis = {1.0, 200.0};
  const SystemParams p;
  const auto a = sweep::shedding_consistency_grid(hs, chis, p, Execution::Serial);
  const auto b = sweep::shedding_consistency_grid(hs, chis, p, Execution::Parallel);
  ASSERT_EQ(a.size(), hs.size() * chis.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].closed_form, b[k].closed_form);
    EXPECT_EQ(a[k].aggregated, b[k].aggregated);
    EXPECT_LE(a[k].gap(), 1e-9);
  }
}

TEST(Sweep, PullGridAndErrors) {
  const std::vector<sweep::PullGridPoint> pts = {
      {150.0, 140, Threshold::finite(160)}, {3.0, 0, Threshold::infinite()}, {20.0, 5, Threshold::finite(9)}};
  const auto a = sweep::pull_residual_grid(pts, Execution::Serial);
  const auto b = sweep::pull_residual_grid(pts, Execution::Parallel);
  EXPECT_EQ(a, b);
  for (double r : a) EXPECT_LE(r, 1e-8);
  const std::vector<sweep::PullGridPoint> bad = {{3.0, 0, Threshold::infinite()}, {-1.0, 0, Threshold::infinite()}};
  EXPECT_THROW(sweep::pull_residual_grid(bad, Execution::Parallel), ValidationError);
  EXPECT_GE(sweep::max_threads(), 1);
}
