#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stickysim/core.hpp"
#include "stickysim/poisson.hpp"

using namespace stickysim;

namespace {

std::vector<double> poisson_pmf(double rate, std::size_t top) {
  std::vector<double> p(top + 1);
  double term = std::exp(-rate);
  double total = 0.0;
  for (std::size_t k = 0; k <= top; ++k) {
    if (k > 0) term *= rate / static_cast<double>(k);
    p[k] = term;
    total += term;
  }
  for (double& x : p) x /= total;
  return p;
}

}  // namespace

TEST(ToTail, PointMassAtZero) {
  const auto s = to_tail(FlowDistribution({1.0}));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], 1.0);
}

TEST(ToTail, CumulativeSum) {
  const auto s = to_tail(FlowDistribution({0.0, 0.5, 0.5}));
  EXPECT_EQ(s, (std::vector<double>{1.0, 1.0, 0.5}));
}

TEST(ToTail, TruncatedPoissonFirstTail) {
  const auto s = to_tail(FlowDistribution(poisson_pmf(2.0, 20)));
  EXPECT_NEAR(s[1], 1.0 - std::exp(-2.0), 1e-9);
}

TEST(ToTail, RoundTripOnRandomPmfs) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + gen() % 40);
    double total = 0.0;
    for (double& x : p) total += (x = u(gen) < 0.3 ? 0.0 : u(gen));
    if (total == 0.0) p[0] = total = 1.0;
    for (double& x : p) x /= total;
    const FlowDistribution dist(p);
    const auto s = to_tail(dist);
    EXPECT_EQ(s[0], 1.0);
    for (std::size_t i = 1; i < s.size(); ++i) {
      EXPECT_LE(s[i], s[i - 1]);
      EXPECT_GE(s[i], 0.0);
    }
    const auto back = to_pmf(s);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(back[i], p[i], 1e-12);
  }
}

TEST(MeanOccupancy, Examples) {
  EXPECT_EQ(mean_occupancy(FlowDistribution::point_mass(150)), 150.0);
  std::vector<double> p(152, 0.0);
  p[150] = p[151] = 0.5;
  EXPECT_EQ(mean_occupancy(FlowDistribution(p)), 150.5);
  EXPECT_NEAR(mean_occupancy(FlowDistribution(poisson_pmf(3.0, 40))), 3.0, 1e-9);
}

TEST(FlowDistribution, RejectsInvalidPmfs) {
  EXPECT_THROW(FlowDistribution({}), ValidationError);
  EXPECT_THROW(FlowDistribution({0.5, 0.4}), ValidationError);
  EXPECT_THROW(FlowDistribution({1.2, -0.2}), ValidationError);
  EXPECT_NO_THROW(FlowDistribution({0.5, 0.5 + 5e-10}));
}

TEST(ValidateParams, PaperSettings) {
  const auto report = validate_params(SystemParams::paper_defaults());
  EXPECT_TRUE(report.stable);
  EXPECT_DOUBLE_EQ(report.utilization, 0.75);
  EXPECT_TRUE(report.warnings.empty());
  EXPECT_DOUBLE_EQ(SystemParams{}.rho(), 150.0);
}

TEST(ValidateParams, HardErrors) {
  SystemParams p;
  p.mu = 0.0;
  EXPECT_THROW(validate_params(p), ValidationError);
  p = {};
  p.n = 0;
  EXPECT_THROW(validate_params(p), ValidationError);
  p = {};
  p.beta = -1.0;
  EXPECT_THROW(validate_params(p), ValidationError);
}

TEST(ValidateParams, StabilityWarningOnly) {
  SystemParams p;
  p.mu = 14000.0;
  const auto report = validate_params(p);
  EXPECT_FALSE(report.stable);
  EXPECT_EQ(report.warnings.size(), 1u);
}

TEST(Threshold, FiniteAndInfinite) {
  EXPECT_FALSE(Threshold::infinite().is_finite());
  EXPECT_EQ(Threshold::finite(3).value(), 3);
  EXPECT_TRUE(Threshold::finite(3).reached_by(3));
  EXPECT_FALSE(Threshold::finite(3).reached_by(2));
  EXPECT_FALSE(Threshold::infinite().reached_by(1 << 30));
  EXPECT_EQ(Threshold::infinite().to_string(), "inf");
  EXPECT_THROW(Threshold::finite(-1), ValidationError);
  EXPECT_THROW((void)Threshold::infinite().value(), std::logic_error);
}

TEST(ValidateScheme, Ranges) {
  EXPECT_THROW(validate_scheme(scheme::PowerOfD{0}), ValidationError);
  EXPECT_THROW(validate_scheme(scheme::PullBased{5, Threshold::finite(5)}), ValidationError);
  EXPECT_THROW(validate_scheme(scheme::PullBased{-1, Threshold::infinite()}), ValidationError);
  EXPECT_THROW(validate_scheme(scheme::BinBased{0, 0, Threshold::infinite()}), ValidationError);
  EXPECT_THROW(validate_scheme(scheme::TransferToInvite{4, 3}), ValidationError);
  EXPECT_NO_THROW(validate_scheme(scheme::PullBased{0, Threshold::infinite()}));
  EXPECT_EQ(scheme_name(scheme::PowerOfD{scheme::PowerOfD::kJoinShortest}), "jsq");
}

TEST(DefaultTruncation, CoversPoissonTail) {
  for (double rho : {0.5, 3.0, 150.0}) {
    const auto top = default_truncation(rho);
    EXPECT_GE(static_cast<double>(top), rho + 12.0 * std::sqrt(rho) - 1.0);
    EXPECT_LT(std::exp(poisson::log_upper_tail(static_cast<long>(top), rho)), 1e-12);
  }
  EXPECT_GE(default_truncation(3.0, Threshold::finite(500)), 500u);
}

TEST(ChiDelayParams, Invariants) {
  const SystemParams p;
  for (double chi : {0.0, 1.0, 100.0, 300.0}) {
    const auto c = ChiDelayParams::make(chi, p);
    EXPECT_GE(c.a_chi, p.rho());
    EXPECT_GT(c.b_chi(), 0.0);
    EXPECT_NEAR(c.log_b_chi, -chi * (1 - p.nu / p.mu) + c.a_chi - p.rho(), 1e-9);
  }
  EXPECT_THROW(ChiDelayParams::make(-1.0, p), ValidationError);
}

TEST(Poisson, ErlangBMatchesPmfRatio) {
  for (double rate : {1.0, 7.5, 150.0}) {
    for (std::size_t c : {1u, 5u, 160u}) {
      const double direct =
          std::exp(poisson::log_pmf(c, rate) - poisson::log_cdf(static_cast<long>(c), rate));
      EXPECT_NEAR(poisson::erlang_b(rate, c) / direct, 1.0, 1e-10);
    }
  }
}

TEST(Poisson, TruncatedPmfSumsToOne) {
  const auto p = poisson::truncated_pmf(150.0, 140, 160);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i < 140) {
      EXPECT_EQ(p[i], 0.0);
    }
    total += p[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Poisson, ZeroRateCutoffIsLowerEnd) {
  EXPECT_EQ(poisson::tail_cutoff(0.0, 0), 0u);
  EXPECT_EQ(poisson::tail_cutoff(0.0, 150), 150u);
}
