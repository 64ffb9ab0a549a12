#pragma once

// Flow-granularity discrete-event simulation of the flow-level schemes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stickysim/core.hpp"
#include "stickysim/rng.hpp"
#include "stickysim/sim_index.hpp"

namespace stickysim {

struct SimConfig {
  SystemParams params;
  SchemeConfig scheme = scheme::PowerOfD{1};
  std::uint64_t seed = 1;
  /// Defaults: 50 beta of warmup, 200 beta measured.
  std::optional<double> warmup;
  std::optional<double> horizon;
  std::size_t tracked_server = 0;
  /// Record every occupancy change of the tracked server.
  bool record_series = true;

  [[nodiscard]] double warmup_time() const { return warmup.value_or(50.0 * params.beta); }
  [[nodiscard]] double horizon_time() const { return horizon.value_or(200.0 * params.beta); }
};

/// Throws ValidationError for bad parameters, schemes or windows.
void validate_config(const SimConfig& config);

struct SimStats {
  /// Time-weighted fraction of servers with exactly i flows.
  std::vector<double> occupancy_hist;
  /// Time-weighted occupancy distribution of the tracked server.
  std::vector<double> tracked_hist;
  /// (time, occupancy) at every change of the tracked server after warmup,
  /// starting with its occupancy at the warmup instant.
  std::vector<std::pair<double, int>> series;
  std::uint64_t total_flows = 0;  // flows initiated in the measurement window
  std::uint64_t violations = 0;   // flows discarded or moved, once each
  std::uint64_t discarded = 0;
  std::uint64_t transferred = 0;
  double mean_occ = 0.0;
  double measured_time = 0.0;
  std::uint64_t events = 0;

  [[nodiscard]] double violation_rate() const {
    return total_flows ? static_cast<double>(violations) / static_cast<double>(total_flows) : 0.0;
  }
  [[nodiscard]] FlowDistribution distribution() const;
};

struct Assignment {
  /// Destination; empty when the flow is discarded.
  std::optional<std::size_t> server;
  /// The server first selected, when it differs from `server` (a transfer)
  /// or the flow was discarded there.
  std::optional<std::size_t> selected;
  bool violation = false;
};

/// Per-scheme routing state maintained incrementally as occupancies change.
class Dispatcher {
 public:
  Dispatcher(const SchemeConfig& scheme, std::span<const int> occupancy);

  /// Must be called after every occupancy change.
  void update(std::size_t server, int old_occ, int new_occ);

  Assignment assign(std::span<const int> occupancy, Rng& rng) const;

  [[nodiscard]] const SchemeConfig& scheme() const { return scheme_; }

 private:
  std::size_t sample_uniform(std::size_t n, Rng& rng) const { return rng.below(n); }
  std::size_t power_of_d(std::span<const int> occupancy, int d, Rng& rng) const;
  /// Invite set if nonempty, else below-h set if nonempty, else nothing.
  std::optional<std::size_t> pull_target(Rng& rng) const;

  SchemeConfig scheme_;
  int low_ = 0;
  std::optional<int> high_;
  bool use_sets_ = false;
  bool use_buckets_ = false;
  IndexedSet invite_;
  IndexedSet below_high_;
  LevelBuckets buckets_;
};

/// One-shot dispatch decision from scratch (O(n)); the simulator uses an
/// incrementally maintained Dispatcher instead.
Assignment assign_flow(const SchemeConfig& scheme, std::span<const int> occupancy, Rng& rng);

SimStats run_flow_sim(const SimConfig& config);

/// Total-variation distance between the empirical histogram and `theory`.
double empirical_vs_theory(const SimStats& stats, const FlowDistribution& theory);

}  // namespace stickysim
