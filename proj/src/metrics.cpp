#include "stickysim/metrics.hpp"

#include <cmath>
#include <limits>

#include "stickysim/poisson.hpp"

namespace stickysim {

namespace {

// floor(mu/nu): the largest integer occupancy still in the exponential branch.
long capacity_floor(const SystemParams& params) {
  return static_cast<long>(std::floor(params.flow_capacity()));
}

}  // namespace

double g_chi(std::size_t i, double chi, const SystemParams& params) {
  if (static_cast<long>(i) > capacity_floor(params)) return 1.0;
  return std::exp(-chi * (1.0 - static_cast<double>(i) * params.nu / params.mu));
}

PacketMetricFn g_chi_fn(double chi, const SystemParams& params) {
  return [chi, params](std::size_t i) { return g_chi(i, chi, params); };
}

double g_tilde(std::span<const double> pmf, const PacketMetricFn& g) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 1; i < pmf.size(); ++i) {
    if (pmf[i] == 0.0) continue;
    const double w = static_cast<double>(i) * pmf[i];
    num += w * g(i);
    den += w;
  }
  if (den <= 0.0) throw ValidationError("g_tilde: no active flows in the distribution");
  return num / den;
}

double g_tilde(const FlowDistribution& dist, const PacketMetricFn& g) {
  return g_tilde(dist.pmf(), g);
}

double g_tilde_flow_jsq(double chi, const SystemParams& params) {
  const double rho = params.rho();
  const double k = std::floor(rho);
  const auto ks = static_cast<std::size_t>(k);
  // Flow-weighted mass at k*: k* p_{k*} / rho with p_{k*} = k*+1-rho.
  const double w = k * (k + 1.0 - rho) / rho;
  return w * g_chi(ks, chi, params) + (1.0 - w) * g_chi(ks + 1, chi, params);
}

double g_tilde_pkt_random(double chi, const SystemParams& params) {
  const double load = params.rho() * params.nu / params.mu;
  if (load >= 1.0) throw ValidationError("packet-level random routing is unstable (rho*nu >= mu)");
  return std::exp(-chi * (1.0 - load));
}

double shedding_tail(Threshold h, double chi, const SystemParams& params) {
  if (h.is_finite() && h.value() < 1) {
    throw ValidationError("shedding_tail: h must be at least 1 (no flows otherwise)");
  }
  const double rho = params.rho();
  const auto cd = ChiDelayParams::make(chi, params);
  const long cap = capacity_floor(params);

  // Numerator terms: b F_a(K-1) covers occupancies in the exponential branch,
  // the Poisson(rho) mass on [K, h-1] covers those with G = 1.
  const long split = h.is_finite() ? std::min<long>(h.value(), cap) : cap;
  std::vector<double> num_terms;
  if (split >= 1) num_terms.push_back(cd.log_b_chi + poisson::log_cdf(split - 1, cd.a_chi));
  double log_den = 0.0;
  if (h.is_finite()) {
    const long top = h.value() - 1;
    if (top >= split) {
      num_terms.push_back(poisson::log_range_mass(rho, static_cast<std::size_t>(split),
                                                  static_cast<std::size_t>(top)));
    }
    log_den = poisson::log_cdf(top, rho);
  } else {
    num_terms.push_back(poisson::log_upper_tail(split - 1, rho));
  }
  return std::exp(poisson::log_sum_exp(std::move(num_terms)) - log_den);
}

double shedding_violation(int h, const SystemParams& params) {
  if (h < 0) throw ValidationError("shedding_violation: h must be non-negative");
  return poisson::erlang_b(params.rho(), static_cast<std::size_t>(h));
}

std::vector<TradeoffPoint> tradeoff_curve(std::span<const int> h_values, double chi,
                                          const SystemParams& params) {
  const double baseline = shedding_tail(Threshold::infinite(), chi, params);
  std::vector<TradeoffPoint> out;
  out.reserve(h_values.size());
  for (int h : h_values) {
    TradeoffPoint pt;
    pt.h = Threshold::finite(h);
    pt.epsilon = shedding_violation(h, params);
    pt.g_chi = shedding_tail(pt.h, chi, params);
    pt.improvement = baseline / pt.g_chi;
    out.push_back(pt);
  }
  return out;
}

TradeoffPoint make_tradeoff_point(Threshold h, double epsilon, const FlowDistribution& dist,
                                  double chi, double baseline, const SystemParams& params) {
  TradeoffPoint pt;
  pt.h = h;
  pt.epsilon = epsilon;
  pt.g_chi = g_tilde(dist, g_chi_fn(chi, params));
  pt.improvement = pt.g_chi > 0.0 ? baseline / pt.g_chi : std::numeric_limits<double>::infinity();
  return pt;
}

}  // namespace stickysim
