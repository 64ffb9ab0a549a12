#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stickysim/mean_field.hpp"
#include "stickysim/poisson.hpp"

namespace stickysim::mean_field {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kSigmaTolerance = 1e-12;
constexpr double kCarriedTolerance = 1e-10;
constexpr double kTailRelTol = 1e-17;

std::vector<double> normalize_logs(const std::vector<double>& logw, std::size_t offset) {
  const double log_norm = poisson::log_sum_exp(logw);
  std::vector<double> pmf(offset + logw.size(), 0.0);
  for (std::size_t k = 0; k < logw.size(); ++k) pmf[offset + k] = std::exp(logw[k] - log_norm);
  return pmf;
}

double mean_of(std::span<const double> pmf) {
  double m = 0.0;
  for (std::size_t i = 1; i < pmf.size(); ++i) m += static_cast<double>(i) * pmf[i];
  return m;
}

// Renormalizes away the last few ulps so FlowDistribution accepts the pmf.
FlowDistribution make_dist(std::vector<double> pmf) {
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return FlowDistribution(std::move(pmf));
}

struct SigmaRoot {
  double sigma;
  int iterations;
  double residual;
  double lo, hi;
};

// Bisection for carried(sigma) = rho on an increasing carried-traffic curve.
SigmaRoot bisect_sigma(CarriedKind kind, double rho, int l, Threshold upper, double lo,
                       double hi) {
  auto f = [&](double sigma) { return carried_traffic(kind, sigma, rho, l, upper) - rho; };
  double f_lo = f(lo);
  for (int i = 0; f_lo > 0.0 && lo > 0.0; ++i) {
    lo = i < 60 ? lo * 0.5 : 0.0;
    f_lo = f(lo);
  }
  double f_hi = f(hi);
  for (int i = 0; f_hi < 0.0; ++i) {
    if (i == 200) {
      std::ostringstream msg;
      msg << "sigma bracket failure: carried traffic stays below rho=" << rho << " up to sigma="
          << hi;
      throw NumericalError(msg.str());
    }
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    f_hi = f(hi);
  }
  if (f_lo > 0.0) {
    std::ostringstream msg;
    msg << "sigma bracket failure: carried traffic at sigma=0 exceeds rho=" << rho;
    throw NumericalError(msg.str());
  }
  const double bracket_lo = lo;
  const double bracket_hi = hi;

  int iterations = 0;
  while (hi - lo > kSigmaTolerance && iterations < 400) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (f_mid == 0.0) {
      lo = hi = mid;
      f_lo = f_hi = 0.0;
      break;
    }
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    ++iterations;
  }
  const bool take_lo = std::abs(f_lo) <= std::abs(f_hi);
  SigmaRoot root{take_lo ? lo : hi, iterations, take_lo ? std::abs(f_lo) : std::abs(f_hi),
                 bracket_lo, bracket_hi};
  if (root.residual > kCarriedTolerance) {
    std::ostringstream msg;
    msg << "sigma solve residual " << root.residual << " exceeds " << kCarriedTolerance
        << " (sigma=" << root.sigma << ", rho=" << rho << ")";
    throw NumericalError(msg.str());
  }
  return root;
}

double initial_hi(double rho, int l, Threshold h) {
  const double width = h.is_finite() ? static_cast<double>(h.value() - l + 1) : rho + 1.0;
  return rho + 10.0 * width;
}

double initial_lo(double rho, Threshold h) {
  return h.is_finite() ? std::max(0.0, rho - h.value()) : 0.0;
}

FixedPoint solve_family(CarriedKind kind, Regime regime, double rho, int l, Threshold upper,
                        Threshold h_for_bracket, int lre_level) {
  const auto root = bisect_sigma(kind, rho, l, upper, initial_lo(rho, h_for_bracket),
                                 initial_hi(rho, l, h_for_bracket));
  auto dist = make_dist(carried_family_pmf(kind, root.sigma, rho, l, upper));
  SigmaSolveDiagnostics diag;
  diag.sigma = root.sigma;
  diag.iterations = root.iterations;
  diag.residual = root.residual;
  diag.regime = regime;
  diag.bracket_lo = root.lo;
  diag.bracket_hi = root.hi;
  if (lre_level > 0 && root.sigma > 0.0) {
    diag.lre = static_cast<double>(lre_level) * dist[static_cast<std::size_t>(lre_level)] /
               root.sigma;
  }
  return {std::move(dist), diag};
}

void require_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("rho must be positive and finite");
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::BelowLow:
      return "rho<l";
    case Regime::Between:
      return "l<=rho<h";
    case Regime::AtOrAboveHigh:
      return "rho>=h";
  }
  return "?";
}

std::vector<double> carried_family_pmf(CarriedKind kind, double sigma, double rho, int l,
                                       Threshold upper) {
  if (sigma < 0.0) throw ValidationError("sigma must be non-negative");
  const auto lo = static_cast<std::size_t>(l);
  switch (kind) {
    case CarriedKind::ErlangLoss:
      return poisson::truncated_pmf(sigma, 0, lo);
    case CarriedKind::LowerReflected: {
      const std::size_t top = upper.is_finite() ? static_cast<std::size_t>(upper.value())
                                                : poisson::tail_cutoff(sigma, lo, kTailRelTol);
      return poisson::truncated_pmf(sigma, lo, top);
    }
    case CarriedKind::UpperReflected:
      return poisson::truncated_pmf(sigma, lo, poisson::tail_cutoff(sigma, lo, kTailRelTol));
    case CarriedKind::InviteHybrid: {
      if (!upper.is_finite()) throw ValidationError("invite hybrid needs a finite upper level");
      const auto top = static_cast<std::size_t>(upper.value());
      if (sigma == 0.0) {
        std::vector<double> pmf(top + 1, 0.0);
        pmf[0] = 1.0;
        return pmf;
      }
      const double ls = std::log(sigma);
      const double lr = std::log(rho);
      std::vector<double> logw;
      logw.reserve(top + 1);
      for (std::size_t i = 0; i <= top; ++i) {
        const auto id = static_cast<double>(i);
        const double base = i <= lo ? id * ls : static_cast<double>(lo) * ls +
                                                     (id - static_cast<double>(lo)) * lr;
        logw.push_back(base - std::lgamma(id + 1.0));
      }
      return normalize_logs(logw, 0);
    }
  }
  throw ValidationError("unknown carried-traffic family");
}

double carried_traffic(CarriedKind kind, double sigma, double rho, int l, Threshold upper) {
  return mean_of(carried_family_pmf(kind, sigma, rho, l, upper));
}

FlowDistribution jsq_fixed_point(double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ValidationError("rho must be non-negative");
  const double k = std::floor(rho);
  const auto ks = static_cast<std::size_t>(k);
  std::vector<double> pmf(ks + 2, 0.0);
  pmf[ks] = k + 1.0 - rho;
  pmf[ks + 1] = rho - k;
  return FlowDistribution(std::move(pmf));
}

FixedPoint solve_pull_fixed_point(double rho, int l, Threshold h) {
  require_rho(rho);
  validate_scheme(scheme::PullBased{l, h});
  if (rho < l) {
    return solve_family(CarriedKind::ErlangLoss, Regime::BelowLow, rho, l, Threshold::finite(l),
                        Threshold::finite(l), 0);
  }
  if (!h.is_finite() || rho < h.value()) {
    return solve_family(CarriedKind::LowerReflected, Regime::Between, rho, l, h, h, l);
  }
  return solve_family(CarriedKind::UpperReflected, Regime::AtOrAboveHigh, rho, h.value(),
                      Threshold::infinite(), h, h.value());
}

FlowDistribution shedding_fixed_point(double rho, Threshold h) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ValidationError("rho must be non-negative");
  const std::size_t top = h.is_finite() ? static_cast<std::size_t>(h.value())
                                        : poisson::tail_cutoff(rho, 0, kTailRelTol);
  return make_dist(poisson::truncated_pmf(rho, 0, top));
}

FixedPoint solve_transfer_invite_fixed_point(double rho, int l, int h) {
  require_rho(rho);
  validate_scheme(scheme::TransferToInvite{l, h});
  if (rho < l) {
    return solve_family(CarriedKind::InviteHybrid, Regime::BelowLow, rho, l, Threshold::finite(h),
                        Threshold::finite(h), 0);
  }
  auto pull = solve_pull_fixed_point(rho, l, Threshold::finite(h));
  if (rho >= h) return pull;
  // Transfers out of level h must keep up with departures from level l;
  // otherwise servers drain below l and the invite-case form applies.
  const double transfers = rho * pull.dist[static_cast<std::size_t>(h)];
  const double drain = l * pull.dist[static_cast<std::size_t>(l)];
  if (transfers >= drain) return pull;
  return solve_family(CarriedKind::InviteHybrid, Regime::Between, rho, l, Threshold::finite(h),
                      Threshold::finite(h), 0);
}

std::size_t least_loaded_min_level(double rho, int h) {
  require_rho(rho);
  if (h < 1) throw ValidationError("h must be at least 1");
  const double lr = std::log(rho);
  const double ref = h * lr - std::lgamma(h + 1.0);
  for (int i = 0; i < h; ++i) {
    if (i * lr - std::lgamma(i + 1.0) > ref) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(h);
}

LeastLoadedFixedPoint solve_least_loaded_fixed_point(double rho, int h) {
  require_rho(rho);
  if (h < 1) throw ValidationError("h must be at least 1");
  if (rho >= h) {
    auto dist = jsq_fixed_point(rho);
    const std::size_t k = static_cast<std::size_t>(std::floor(rho));
    return {std::move(dist), k, 0.0};
  }
  const std::size_t i_star = least_loaded_min_level(rho, h);
  if (i_star == 0) {
    throw ValidationError("least-loaded fixed point with i* = 0 is not supported (rho=" +
                          std::to_string(rho) + ", h=" + std::to_string(h) + ")");
  }
  const double lr = std::log(rho);
  const double log_hfact = std::lgamma(h + 1.0);
  // Weights relative to p_h.
  std::vector<double> logw;
  logw.reserve(static_cast<std::size_t>(h) - i_star + 1);
  const auto is = static_cast<double>(i_star);
  const double log_gap = log_hfact + is * lr - std::lgamma(is + 1.0) - h * lr;
  logw.push_back(lr - std::log(rho - is) + std::log(std::expm1(log_gap)));
  for (auto i = i_star + 1; i <= static_cast<std::size_t>(h); ++i) {
    const auto id = static_cast<double>(i);
    logw.push_back(log_hfact - (h - id) * lr - std::lgamma(id + 1.0));
  }
  auto dist = make_dist(normalize_logs(logw, i_star));
  const double gap = mean_occupancy(dist) - rho;
  return {std::move(dist), i_star, gap};
}

FlowDistribution analytic_fixed_point(const SchemeConfig& scheme, double rho) {
  validate_scheme(scheme);
  return std::visit(
      overloaded{
          [&](const scheme::PowerOfD& c) {
            if (c.is_jsq()) return jsq_fixed_point(rho);
            if (c.d == 1) return shedding_fixed_point(rho, Threshold::infinite());
            throw ValidationError("power-of-d with 1 < d < n has no closed-form fixed point");
          },
          [&](const scheme::PullBased& c) { return solve_pull_fixed_point(rho, c.l, c.h).dist; },
          [&](const scheme::Shedding& c) { return shedding_fixed_point(rho, c.h); },
          [&](const scheme::TransferToInvite& c) {
            return solve_transfer_invite_fixed_point(rho, c.l, c.h).dist;
          },
          [&](const scheme::TransferToLeastLoaded& c) {
            return solve_least_loaded_fixed_point(rho, c.h).dist;
          },
          [](const scheme::BinBased&) -> FlowDistribution {
            throw ValidationError("the bin-based scheme has no analytic fixed point");
          },
      },
      scheme);
}

double fixed_point_residual(const SchemeConfig& scheme, const FlowDistribution& dist,
                            double rho) {
  auto tail = to_tail(dist);
  tail.push_back(0.0);
  std::vector<double> q(tail.size());
  assignment_probs_into(scheme, tail, rho, q);
  double worst = 0.0;
  for (std::size_t i = 1; i < tail.size(); ++i) {
    worst = std::max(worst, std::abs(rho * q[i - 1] - static_cast<double>(i) * dist[i]));
  }
  return worst;
}

}  // namespace stickysim::mean_field
