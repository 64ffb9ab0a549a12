#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace stickysim {

/// Thrown for malformed parameters or configurations (CLI exit code 1).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a solver or integrator cannot meet its numerical contract
/// (bracket failure, step-size underflow, residual above tolerance).
/// CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Server-level model parameters. Rates are per second, durations in seconds.
struct SystemParams {
  std::size_t n = 500;    // servers
  double lambda = 100.0;  // flow initiations per server
  double beta = 1.5;      // mean flow duration
  double nu = 100.0;      // packets per active flow
  double mu = 20000.0;    // packet service rate per server

  [[nodiscard]] double rho() const { return lambda * beta; }

  /// mu / nu: the number of concurrent flows a server can carry before the
  /// packet queue is unstable.
  [[nodiscard]] double flow_capacity() const { return mu / nu; }

  /// System-wide packet utilization rho * nu / mu.
  [[nodiscard]] double utilization() const { return rho() * nu / mu; }

  /// The paper settings: n=500, lambda=100, beta=1.5, nu=100, mu=20000.
  static SystemParams paper_defaults() { return {}; }
};

struct ParamReport {
  bool stable = true;  // ceil(rho) * nu < mu
  double utilization = 0.0;
  std::vector<std::string> warnings;
};

/// Hard errors (ValidationError) for non-positive rates or counts; the
/// stability condition ceil(rho)*nu < mu is only reported.
ParamReport validate_params(const SystemParams& params);

/// A non-negative integer threshold that may be unbounded.
class Threshold {
 public:
  static Threshold finite(int value);
  static Threshold infinite() { return Threshold{}; }

  [[nodiscard]] bool is_finite() const { return value_.has_value(); }
  /// Precondition: is_finite().
  [[nodiscard]] int value() const;

  /// True when an occupancy of `k` is at or above the threshold.
  [[nodiscard]] bool reached_by(long k) const { return is_finite() && k >= *value_; }

  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Threshold&, const Threshold&) = default;

 private:
  Threshold() = default;
  std::optional<int> value_;
};

namespace scheme {

/// Join the least loaded of d distinct uniformly sampled servers. d >= n is
/// flow-level JSQ.
struct PowerOfD {
  static constexpr int kJoinShortest = 1 << 30;
  int d = 2;
  [[nodiscard]] bool is_jsq() const { return d >= kJoinShortest; }
};

/// Invite (occupancy < l) / disinvite (occupancy >= h) messaging.
struct PullBased {
  int l = 0;
  Threshold h = Threshold::infinite();
};

/// Random assignment; arrivals at a server with h flows are discarded.
struct Shedding {
  Threshold h = Threshold::infinite();
};

/// Random assignment; arrivals at a server with h flows are diverted to a
/// server below l, else below h, else discarded.
struct TransferToInvite {
  int l = 0;
  int h = 1;
  bool move_existing_flow = false;
};

/// Random assignment; arrivals at a server with h flows are diverted to a
/// least-loaded server.
struct TransferToLeastLoaded {
  int h = 1;
  bool move_existing_flow = false;
};

/// Static hash of flows to m bins, pull-based re-allocation of bins.
struct BinBased {
  std::size_t m = 5000;
  int l = 0;
  Threshold h = Threshold::infinite();
  /// Move a bin on every arrival that finds the load above h. When false,
  /// only the h -> h+1 crossing moves a bin, so a server pushed past h by an
  /// incoming bin stays there until departures bring it down.
  bool move_while_above = true;
};

}  // namespace scheme

using SchemeConfig = std::variant<scheme::PowerOfD, scheme::PullBased, scheme::Shedding,
                                  scheme::TransferToInvite, scheme::TransferToLeastLoaded,
                                  scheme::BinBased>;

/// Throws ValidationError when thresholds or counts are out of range.
void validate_scheme(const SchemeConfig& config);

std::string scheme_name(const SchemeConfig& config);

/// Stationary fraction of servers with exactly i flows, i = 0..i_max.
class FlowDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Validates non-negativity and unit mass.
  explicit FlowDistribution(std::vector<double> pmf);

  /// All mass at occupancy k.
  static FlowDistribution point_mass(std::size_t k);

  /// Inverse of to_tail: p_i = s_i - s_{i+1}, with s_{i_max+1} = 0.
  static FlowDistribution from_tail(std::span<const double> tail);

  [[nodiscard]] std::span<const double> pmf() const { return pmf_; }
  [[nodiscard]] double operator[](std::size_t i) const { return i < pmf_.size() ? pmf_[i] : 0.0; }
  [[nodiscard]] std::size_t i_max() const { return pmf_.size() - 1; }
  [[nodiscard]] std::size_t size() const { return pmf_.size(); }

 private:
  std::vector<double> pmf_;
};

/// s_i = sum_{j >= i} p_j, accumulated from the top so small tail values
/// keep their relative precision.
std::vector<double> to_tail(const FlowDistribution& dist);

/// Inverse of to_tail.
std::vector<double> to_pmf(std::span<const double> tail);

/// sum_i i * p_i
double mean_occupancy(const FlowDistribution& dist);

/// Half the L1 distance between two pmfs; shorter support is zero-padded.
double total_variation(std::span<const double> p, std::span<const double> q);
double total_variation(const FlowDistribution& p, const FlowDistribution& q);

/// Default truncation level max(h, ceil(rho + 12 sqrt(rho))), raised further
/// until the Poisson(rho) tail beyond it is below 1e-16.
std::size_t default_truncation(double rho, Threshold h = Threshold::infinite());

/// a_chi = rho e^{chi nu / mu} and b_chi = exp(-chi(1 - nu/mu) + a_chi - rho).
/// Only the logarithms are stored: b_chi overflows for chi in the hundreds.
struct ChiDelayParams {
  double chi = 0.0;
  double a_chi = 0.0;
  double log_b_chi = 0.0;

  static ChiDelayParams make(double chi, const SystemParams& params);
  [[nodiscard]] double b_chi() const;
};

}  // namespace stickysim
