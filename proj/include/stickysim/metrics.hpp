#pragma once

#include <functional>
#include <span>
#include <vector>

#include "stickysim/core.hpp"

namespace stickysim {

/// Packet-level performance as a function of the number of concurrent flows
/// at a server, with values in [0, 1].
using PacketMetricFn = std::function<double(std::size_t)>;

/// One point on the stickiness / delay trade-off.
struct TradeoffPoint {
  Threshold h = Threshold::infinite();
  double epsilon = 0.0;      // stickiness violation probability
  double g_chi = 0.0;        // chi-delay tail probability at this h
  double improvement = 1.0;  // G_chi at h = inf divided by g_chi
};

/// Probability that a packet at a server with i flows (M/M/1 with arrival
/// rate i*nu, service rate mu) waits more than chi mean service times:
/// exp(-chi (1 - i nu/mu)) for i <= mu/nu, else 1.
double g_chi(std::size_t i, double chi, const SystemParams& params);

PacketMetricFn g_chi_fn(double chi, const SystemParams& params);

/// Flow-weighted average sum_i i G(i) p_i / sum_i i p_i. Throws
/// ValidationError when every server is empty.
double g_tilde(std::span<const double> pmf, const PacketMetricFn& g);
double g_tilde(const FlowDistribution& dist, const PacketMetricFn& g);

/// chi-delay tail of flow-level JSQ: the flow-weighted combination of
/// G(k*) and G(k*+1) at the two-point fixed point, k* = floor(rho).
double g_tilde_flow_jsq(double chi, const SystemParams& params);

/// chi-delay tail of packet-level random routing, G_chi evaluated at the
/// real-valued rho. Throws ValidationError when rho*nu >= mu.
double g_tilde_pkt_random(double chi, const SystemParams& params);

/// Closed-form chi-delay tail of load shedding at threshold h (unbounded h
/// is the perfect-stickiness baseline). Evaluated in log space.
double shedding_tail(Threshold h, double chi, const SystemParams& params);

/// Blocking probability f_rho(h) / F_rho(h) of the Erlang loss system.
double shedding_violation(int h, const SystemParams& params);

/// Shedding trade-off over the given finite thresholds.
std::vector<TradeoffPoint> tradeoff_curve(std::span<const int> h_values, double chi,
                                          const SystemParams& params);

/// Trade-off point for an arbitrary stationary distribution and violation
/// probability, measured against `baseline` (the h = inf tail).
TradeoffPoint make_tradeoff_point(Threshold h, double epsilon, const FlowDistribution& dist,
                                  double chi, double baseline, const SystemParams& params);

}  // namespace stickysim
