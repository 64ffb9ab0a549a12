#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stickysim/mean_field.hpp"
#include "stickysim/metrics.hpp"

using namespace stickysim;
using namespace stickysim::mean_field;

namespace {

constexpr double kResidualTol = 1e-8;

SystemParams with_rho(double rho) {
  SystemParams p;
  p.lambda = rho / p.beta;
  return p;
}

std::vector<double> poisson_pmf(double rate, std::size_t top) {
  std::vector<double> p(top + 1);
  double log_term = -rate;
  for (std::size_t k = 0; k <= top; ++k) {
    if (k > 0) log_term += std::log(rate / static_cast<double>(k));
    p[k] = std::exp(log_term);
  }
  return p;
}

}  // namespace

TEST(Jsq, Examples) {
  EXPECT_EQ(jsq_fixed_point(150.0)[150], 1.0);
  const auto half = jsq_fixed_point(150.5);
  EXPECT_DOUBLE_EQ(half[150], 0.5);
  EXPECT_DOUBLE_EQ(half[151], 0.5);
  const auto small = jsq_fixed_point(0.3);
  EXPECT_NEAR(small[0], 0.7, 1e-15);
  EXPECT_NEAR(small[1], 0.3, 1e-15);
}

TEST(Pull, TightThresholdsGiveJsq) {
  for (double rho : {3.4, 150.5, 150.0}) {
    const int k = static_cast<int>(std::floor(rho));
    const auto fp = solve_pull_fixed_point(rho, k, Threshold::finite(k + 1));
    EXPECT_LE(total_variation(fp.dist, jsq_fixed_point(rho)), 1e-9) << rho;
  }
}

TEST(Pull, NoThresholdsGivePoisson) {
  const auto fp = solve_pull_fixed_point(7.0, 0, Threshold::infinite());
  const auto ref = poisson_pmf(7.0, 80);
  EXPECT_LE(total_variation(fp.dist.pmf(), ref), 1e-12);
}

TEST(Pull, PaperSettingsTruncatedPoisson) {
  const auto fp = solve_pull_fixed_point(150.0, 140, Threshold::finite(160));
  EXPECT_EQ(fp.diag.regime, Regime::Between);
  EXPECT_LE(fp.diag.residual, 1e-10);
  for (std::size_t i = 0; i < fp.dist.size(); ++i) {
    if (i < 140 || i > 160) {
      EXPECT_EQ(fp.dist[i], 0.0);
    }
  }
  for (std::size_t i = 141; i <= 160; ++i) {
    EXPECT_NEAR(fp.dist[i] / fp.dist[i - 1], fp.diag.sigma / static_cast<double>(i), 1e-9);
  }
  EXPECT_NEAR(mean_occupancy(fp.dist), 150.0, 1e-9);
}

TEST(Pull, AllRegimes) {
  const SchemeConfig low = scheme::PullBased{20, Threshold::finite(30)};
  for (double rho : {12.0, 25.0, 37.0}) {
    const auto fp = solve_pull_fixed_point(rho, 20, Threshold::finite(30));
    EXPECT_LE(fixed_point_residual(low, fp.dist, rho), kResidualTol) << rho;
    EXPECT_NEAR(mean_occupancy(fp.dist), rho, 1e-8);
    EXPECT_EQ(fp.diag.lre.has_value(), rho >= 20.0) << rho;
  }
  EXPECT_EQ(solve_pull_fixed_point(12.0, 20, Threshold::finite(30)).diag.regime, Regime::BelowLow);
  EXPECT_EQ(solve_pull_fixed_point(37.0, 20, Threshold::finite(30)).diag.regime,
            Regime::AtOrAboveHigh);
}

TEST(Pull, LoadExactlyAtUpperThreshold) {
  const SchemeConfig sc = scheme::PullBased{140, Threshold::finite(150)};
  const auto fp = solve_pull_fixed_point(150.0, 140, Threshold::finite(150));
  EXPECT_EQ(fp.diag.regime, Regime::AtOrAboveHigh);
  EXPECT_NEAR(fp.dist[150], 1.0, 1e-12);
  EXPECT_LE(fixed_point_residual(sc, fp.dist, 150.0), kResidualTol);
  const auto ti = solve_transfer_invite_fixed_point(150.0, 140, 150);
  EXPECT_NEAR(ti.dist[150], 1.0, 1e-12);
}

TEST(Shedding, Examples) {
  EXPECT_EQ(shedding_fixed_point(150.0, Threshold::finite(0))[0], 1.0);
  const auto full = shedding_fixed_point(4.0, Threshold::infinite());
  const auto ref = poisson_pmf(4.0, 60);
  EXPECT_LE(total_variation(full.pmf(), ref), 1e-14);
  const auto cut = shedding_fixed_point(150.0, Threshold::finite(160));
  EXPECT_NEAR(cut[160] / shedding_violation(160, SystemParams{}), 1.0, 1e-12);
}

TEST(TransferInvite, MatchesPullBetweenThresholds) {
  const auto a = solve_transfer_invite_fixed_point(150.0, 140, 160);
  const auto b = solve_pull_fixed_point(150.0, 140, Threshold::finite(160));
  ASSERT_EQ(a.dist.size(), b.dist.size());
  for (std::size_t i = 0; i < a.dist.size(); ++i) EXPECT_EQ(a.dist[i], b.dist[i]);
}

TEST(TransferInvite, BelowLowHybrid) {
  const auto fp = solve_transfer_invite_fixed_point(2.0, 5, 8);
  EXPECT_NEAR(mean_occupancy(fp.dist), 2.0, 1e-8);
  EXPECT_LE(fixed_point_residual(scheme::TransferToInvite{5, 8}, fp.dist, 2.0), kResidualTol);
}

TEST(TransferInvite, SlowTransfersLeaveMassBelowLow) {
  // rho p_h < l p_l for the pull-shaped candidate, so servers drain below l
  const double rho = 51.8266;
  const auto fp = solve_transfer_invite_fixed_point(rho, 51, 72);
  EXPECT_GT(1.0 - to_tail(fp.dist)[51], 1e-3);
  EXPECT_LE(fixed_point_residual(scheme::TransferToInvite{51, 72}, fp.dist, rho), kResidualTol);
  const auto s0 = MeanFieldState::from_distribution(FlowDistribution::point_mass(60), 140);
  OdeOptions opt;
  opt.stop_residual = 1e-12;
  const auto r = integrate_ode(scheme::TransferToInvite{51, 72}, with_rho(rho), s0, 600.0, opt);
  EXPECT_LE(total_variation(r.terminal.to_distribution(), fp.dist), 1e-6);
}

TEST(TransferInvite, CarriedTrafficIsMonotone) {
  double prev = -1.0;
  for (int k = 1; k <= 100; ++k) {
    const double sigma = 0.05 * k;
    const double h = carried_traffic(CarriedKind::InviteHybrid, sigma, 2.0, 5, Threshold::finite(8));
    EXPECT_GT(h, prev);
    prev = h;
  }
  EXPECT_LT(carried_traffic(CarriedKind::InviteHybrid, 1e-9, 2.0, 5, Threshold::finite(8)), 1e-6);
}

TEST(CarriedTraffic, MonotoneForEveryFamily) {
  for (auto kind : {CarriedKind::ErlangLoss, CarriedKind::LowerReflected,
                    CarriedKind::UpperReflected}) {
    double prev = -1.0;
    for (int k = 1; k <= 100; ++k) {
      const double h = carried_traffic(kind, 2.0 * k, 150.0, 140, Threshold::finite(160));
      EXPECT_GE(h, prev);
      prev = h;
    }
  }
}

TEST(LeastLoaded, AboveThresholdIsJsq) {
  const auto fp = solve_least_loaded_fixed_point(150.5, 140);
  EXPECT_NEAR(fp.dist[150], 0.5, 1e-12);
  EXPECT_NEAR(fp.dist[151], 0.5, 1e-12);
}

TEST(LeastLoaded, MinimumLevel) {
  EXPECT_EQ(least_loaded_min_level(3.5, 4), 3u);
  const auto fp = solve_least_loaded_fixed_point(3.5, 4);
  EXPECT_EQ(fp.i_star, 3u);
  EXPECT_LE(fixed_point_residual(scheme::TransferToLeastLoaded{4}, fp.dist, 3.5), kResidualTol);
}

TEST(LeastLoaded, MatchesOde) {
  const auto fp = solve_least_loaded_fixed_point(150.0, 160);
  const auto s0 = MeanFieldState::from_distribution(FlowDistribution::point_mass(150), 220);
  OdeOptions opt;
  opt.stop_residual = 1e-12;
  const auto r = integrate_ode(scheme::TransferToLeastLoaded{160}, with_rho(150.0), s0, 200.0, opt);
  EXPECT_LE(total_variation(r.terminal.to_distribution(), fp.dist), 1e-5);
}

TEST(LeastLoaded, EmptyMinimumIsUnsupported) {
  EXPECT_EQ(least_loaded_min_level(0.5, 3), 0u);
  EXPECT_THROW(solve_least_loaded_fixed_point(0.5, 3), ValidationError);
}

TEST(AnalyticFixedPoint, Dispatch) {
  EXPECT_THROW(analytic_fixed_point(scheme::PowerOfD{2}, 3.0), ValidationError);
  EXPECT_THROW(analytic_fixed_point(scheme::BinBased{}, 3.0), ValidationError);
  const auto jsq = analytic_fixed_point(scheme::PowerOfD{scheme::PowerOfD::kJoinShortest}, 150.5);
  EXPECT_DOUBLE_EQ(jsq[151], 0.5);
}

TEST(FixedPointResidual, RandomTriplesAllRegimes) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> l_dist(2, 150);
  std::uniform_int_distribution<int> w_dist(2, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int l = l_dist(gen);
    const int h = l + w_dist(gen);
    const double below = std::max(0.6, l * u(gen));
    const double between = l + (h - l) * u(gen);
    const double above = h + 20.0 * u(gen);
    for (double rho : {below, between, above}) {
      const auto pull = solve_pull_fixed_point(rho, l, Threshold::finite(h));
      EXPECT_LE(fixed_point_residual(scheme::PullBased{l, Threshold::finite(h)}, pull.dist, rho),
                kResidualTol);
      const auto inv = solve_transfer_invite_fixed_point(rho, l, h);
      EXPECT_LE(fixed_point_residual(scheme::TransferToInvite{l, h}, inv.dist, rho), kResidualTol);
      const auto shed = shedding_fixed_point(rho, Threshold::finite(h));
      EXPECT_LE(fixed_point_residual(scheme::Shedding{Threshold::finite(h)}, shed, rho),
                kResidualTol);
      if (least_loaded_min_level(rho, h) > 0 || rho >= h) {
        const auto ll = solve_least_loaded_fixed_point(rho, h);
        EXPECT_LE(fixed_point_residual(scheme::TransferToLeastLoaded{h}, ll.dist, rho),
                  kResidualTol);
      }
    }
  }
}
