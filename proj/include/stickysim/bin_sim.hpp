#pragma once

// Bin-based load balancing: flows hash statically to m bins, bins map to
// servers through a table that is re-allocated when a server crosses h.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "stickysim/flow_sim.hpp"

namespace stickysim {

/// splitmix64 finalizer of the flow id, reduced mod m.
std::size_t hash_flow_to_bin(std::uint64_t flow_id, std::size_t m);

class BinTable {
 public:
  /// Bin j starts on server j mod n.
  BinTable(std::size_t m, std::size_t n);

  [[nodiscard]] std::size_t bins() const { return server_of_.size(); }
  [[nodiscard]] std::size_t servers() const { return server_bins_.size(); }
  [[nodiscard]] std::size_t server_of(std::size_t bin) const { return server_of_[bin]; }
  [[nodiscard]] const std::vector<std::uint32_t>& bins_of(std::size_t server) const {
    return server_bins_[server];
  }
  /// Active flow slots hashed to `bin`.
  [[nodiscard]] const std::vector<std::uint32_t>& flows_in(std::size_t bin) const {
    return bin_flows_[bin];
  }
  [[nodiscard]] std::size_t active_flows() const { return active_; }

  void add_flow(std::size_t bin, std::uint32_t slot);
  void remove_flow(std::size_t bin, std::uint32_t slot);
  void move_bin(std::size_t bin, std::size_t to);

  /// Full bookkeeping check: every bin listed once on the server the
  /// assignment map names, and flow counts add up. For tests.
  [[nodiscard]] bool consistent() const;

 private:
  std::vector<std::uint32_t> server_of_;
  std::vector<std::uint32_t> pos_in_server_;
  std::vector<std::vector<std::uint32_t>> server_bins_;
  std::vector<std::vector<std::uint32_t>> bin_flows_;
  std::vector<std::uint32_t> flow_pos_;  // indexed by slot
  std::size_t active_ = 0;
};

struct Reallocation {
  std::size_t bin = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t flows_moved = 0;
  std::size_t newly_violated = 0;
  bool moved = false;  // false when the destination equals the source
  bool anomaly = false;  // source server had no bins
};

/// Moves a uniformly random bin off `server`: to a uniform invite server if
/// any, else a uniform server below h, else a uniform server. Flows in the
/// moved bin are flagged in `violated` (indexed by flow slot), once each.
Reallocation reallocate_bin(BinTable& table, std::size_t server, const IndexedSet& invite,
                            const IndexedSet& below_high, std::vector<std::uint8_t>& violated,
                            Rng& rng);

struct BinSimStats : SimStats {
  std::uint64_t reallocations = 0;
  std::uint64_t violated_flows = 0;  // equals `violations`
  std::uint64_t anomalies = 0;
  std::uint64_t self_moves = 0;  // destinations equal to the source, skipped
};

/// Throws ValidationError unless config.scheme is BinBased.
BinSimStats run_bin_sim(const SimConfig& config);

}  // namespace stickysim
