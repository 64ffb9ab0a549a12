#pragma once

// Mean-field dynamics ds_i/dt = lambda q_{i-1}(s) - i (s_i - s_{i+1}) / beta
// for the flow-level schemes, and their fixed points.
//
// States are tails s_i = fraction of servers with at least i flows, stored
// for i = 0..i_max with s_{i_max+1} = 0. Assignment probabilities q[k] are
// the probability that an arriving flow joins a server with exactly k flows.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stickysim/core.hpp"

namespace stickysim::mean_field {

/// Tail values within this distance of 1 are treated as exactly 1 when the
/// scheme formulas distinguish "s_l < 1" from "s_l = 1".
inline constexpr double kUnitTolerance = 1e-12;

class MeanFieldState {
 public:
  /// Validates s_0 = 1 and 0 <= s_{i+1} <= s_i (to within 1e-12).
  explicit MeanFieldState(std::vector<double> tail);
  static MeanFieldState from_distribution(const FlowDistribution& dist, std::size_t i_max);

  [[nodiscard]] std::span<const double> tail() const { return s_; }
  [[nodiscard]] double operator[](std::size_t i) const { return i < s_.size() ? s_[i] : 0.0; }
  [[nodiscard]] std::size_t size() const { return s_.size(); }
  [[nodiscard]] FlowDistribution to_distribution() const;

 private:
  std::vector<double> s_;
};

struct AssignmentProbs {
  std::vector<double> q;
  [[nodiscard]] double total() const;
};

AssignmentProbs q_power_of_d(const MeanFieldState& s, int d);
/// Flow-level JSQ (d = n, n -> inf): arrivals fill servers that drop below the
/// minimum level m first, then servers at m.
AssignmentProbs q_join_shortest(const MeanFieldState& s, double rho);
AssignmentProbs q_pull_based(const MeanFieldState& s, int l, Threshold h, double rho);
/// Mass s_h (blocked arrivals) is missing from the total.
AssignmentProbs q_shedding(const MeanFieldState& s, Threshold h);
AssignmentProbs q_transfer_to_invite(const MeanFieldState& s, int l, int h, double rho);
AssignmentProbs q_transfer_to_least_loaded(const MeanFieldState& s, int h, double rho);

/// Dispatches on the scheme. BinBased has no mean-field description and
/// throws ValidationError.
AssignmentProbs assignment_probs(const SchemeConfig& scheme, const MeanFieldState& s, double rho);

/// Writes q for `tail` into `out` (same length). Used by the integrator to
/// avoid per-evaluation allocations.
void assignment_probs_into(const SchemeConfig& scheme, std::span<const double> tail, double rho,
                           std::span<double> out);

/// Right-hand side of the mean-field ODE at `s`.
std::vector<double> drift(const SchemeConfig& scheme, const SystemParams& params,
                          const MeanFieldState& s);

struct OdeOptions {
  /// Default step is 1e-3 * beta when unset.
  std::optional<double> dt;
  /// Stop early once the drift sup-norm falls below this (0 disables).
  double stop_residual = 0.0;
  /// Record the state every `sample_interval` time units (0 disables).
  double sample_interval = 0.0;
  /// Largest candidate-step violation of 0 <= s_{i+1} <= s_i <= 1 that the
  /// post-step projection may absorb; larger ones halve the step.
  double projection_tolerance = 1e-6;
  /// Halvings allowed before reporting step-size underflow.
  int max_halvings = 48;
};

struct OdeResult {
  MeanFieldState terminal;
  double t = 0.0;
  std::size_t steps = 0;
  std::size_t rejected_steps = 0;
  double residual = 0.0;  // sup-norm of ds/dt at the terminal state
  std::vector<std::pair<double, MeanFieldState>> trajectory;
};

/// Explicit RK4 with post-step projection onto valid tails. Throws
/// NumericalError on step-size underflow.
OdeResult integrate_ode(const SchemeConfig& scheme, const SystemParams& params,
                        const MeanFieldState& s0, double t_end, const OdeOptions& options = {});

/// Upper bound on any power-of-d fixed point tail: 1 for i <= k* = floor(rho),
/// else (rho/(k*+1))^((d^(i-k*) - 1)/(d - 1)), with exponent i - k* at d = 1.
double pod_upper_bound(double rho, int d, std::size_t i);

// ---------------------------------------------------------------------------
// Fixed points

enum class Regime { BelowLow, Between, AtOrAboveHigh };

const char* regime_name(Regime r);

struct SigmaSolveDiagnostics {
  double sigma = 0.0;
  int iterations = 0;
  double residual = 0.0;  // |carried(sigma) - rho|
  /// Dummy users created per regular user (l p_l / sigma or h p_h / sigma).
  std::optional<double> lre;
  Regime regime = Regime::Between;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

struct FixedPoint {
  FlowDistribution dist;
  SigmaSolveDiagnostics diag;
};

/// Which family of pmf a sigma parameterizes.
enum class CarriedKind {
  ErlangLoss,      // sigma^i / i! on 0..l
  LowerReflected,  // sigma^(i-l) l!/i! on l..h (truncated Poisson on [l, h])
  UpperReflected,  // sigma^(i-h) h!/i! on h..inf
  InviteHybrid,    // sigma^i/i! below l, sigma^l rho^(i-l)/i! on l+1..h
};

/// The pmf of the given family at offered load sigma. `upper` is ignored for
/// ErlangLoss and UpperReflected; unbounded `upper` is cut where the tail is
/// negligible.
std::vector<double> carried_family_pmf(CarriedKind kind, double sigma, double rho, int l,
                                       Threshold upper);

/// Mean of carried_family_pmf: the carried traffic as a function of sigma.
double carried_traffic(CarriedKind kind, double sigma, double rho, int l, Threshold upper);

/// Flow-level JSQ: mass k*+1-rho at k* = floor(rho) and rho-k* at k*+1.
FlowDistribution jsq_fixed_point(double rho);

/// Pull-based fixed point in all three load regimes.
FixedPoint solve_pull_fixed_point(double rho, int l, Threshold h);

/// Poisson(rho) truncated at h.
FlowDistribution shedding_fixed_point(double rho, Threshold h);

/// Transfer-to-invite fixed point. For l <= rho it coincides with the
/// pull-based one as long as rho p_h >= l p_l; when transfers cannot refill
/// the servers leaving level l, the invite-case form (below-l mass) is used.
FixedPoint solve_transfer_invite_fixed_point(double rho, int l, int h);

struct LeastLoadedFixedPoint {
  FlowDistribution dist;
  std::size_t i_star = 0;  // lowest occupied level
  double mean_gap = 0.0;   // mean(dist) - rho, reported rather than asserted
};

/// Transfer-to-least-loaded fixed point. Throws ValidationError when
/// rho < h and i* = 0 (unsupported corner).
LeastLoadedFixedPoint solve_least_loaded_fixed_point(double rho, int h);

/// min{i : rho^i / i! > rho^h / h!}
std::size_t least_loaded_min_level(double rho, int h);

/// Analytic fixed point for any scheme that has one (JSQ, pull, shedding,
/// transfer schemes, power-of-1). Throws ValidationError otherwise.
FlowDistribution analytic_fixed_point(const SchemeConfig& scheme, double rho);

/// max_i |rho q_{i-1}(p) - i p_i| over the support plus one level.
double fixed_point_residual(const SchemeConfig& scheme, const FlowDistribution& dist,
                            double rho);

}  // namespace stickysim::mean_field
