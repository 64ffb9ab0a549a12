#include "stickysim/bin_sim.hpp"

#include <algorithm>

namespace stickysim {

std::size_t hash_flow_to_bin(std::uint64_t flow_id, std::size_t m) {
  if (m == 0) throw ValidationError("bin count must be at least 1");
  return static_cast<std::size_t>(mix64(flow_id) % m);
}

BinTable::BinTable(std::size_t m, std::size_t n)
    : server_of_(m), pos_in_server_(m), server_bins_(n), bin_flows_(m) {
  if (m == 0 || n == 0) throw ValidationError("bin table needs bins and servers");
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t s = b % n;
    server_of_[b] = static_cast<std::uint32_t>(s);
    pos_in_server_[b] = static_cast<std::uint32_t>(server_bins_[s].size());
    server_bins_[s].push_back(static_cast<std::uint32_t>(b));
  }
}

void BinTable::add_flow(std::size_t bin, std::uint32_t slot) {
  if (slot >= flow_pos_.size()) flow_pos_.resize(slot + 1);
  flow_pos_[slot] = static_cast<std::uint32_t>(bin_flows_[bin].size());
  bin_flows_[bin].push_back(slot);
  ++active_;
}

void BinTable::remove_flow(std::size_t bin, std::uint32_t slot) {
  auto& list = bin_flows_[bin];
  const std::uint32_t last = list.back();
  list[flow_pos_[slot]] = last;
  flow_pos_[last] = flow_pos_[slot];
  list.pop_back();
  --active_;
}

void BinTable::move_bin(std::size_t bin, std::size_t to) {
  const std::size_t from = server_of_[bin];
  if (from == to) return;
  auto& src = server_bins_[from];
  const std::uint32_t last = src.back();
  src[pos_in_server_[bin]] = last;
  pos_in_server_[last] = pos_in_server_[bin];
  src.pop_back();
  pos_in_server_[bin] = static_cast<std::uint32_t>(server_bins_[to].size());
  server_bins_[to].push_back(static_cast<std::uint32_t>(bin));
  server_of_[bin] = static_cast<std::uint32_t>(to);
}

bool BinTable::consistent() const {
  std::vector<int> seen(server_of_.size(), 0);
  for (std::size_t s = 0; s < server_bins_.size(); ++s) {
    for (std::size_t k = 0; k < server_bins_[s].size(); ++k) {
      const std::uint32_t b = server_bins_[s][k];
      if (server_of_[b] != s || pos_in_server_[b] != k) return false;
      ++seen[b];
    }
  }
  std::size_t flows = 0;
  for (std::size_t b = 0; b < seen.size(); ++b) {
    if (seen[b] != 1) return false;
    flows += bin_flows_[b].size();
  }
  return flows == active_;
}

Reallocation reallocate_bin(BinTable& table, std::size_t server, const IndexedSet& invite,
                            const IndexedSet& below_high, std::vector<std::uint8_t>& violated,
                            Rng& rng) {
  Reallocation r;
  r.from = server;
  const auto& owned = table.bins_of(server);
  if (owned.empty()) {
    r.anomaly = true;
    return r;
  }
  r.bin = owned[rng.below(owned.size())];
  if (!invite.empty()) {
    r.to = invite.sample(rng);
  } else if (!below_high.empty()) {
    r.to = below_high.sample(rng);
  } else {
    r.to = rng.below(table.servers());
  }
  if (r.to == server) return r;
  r.moved = true;
  const auto& flows = table.flows_in(r.bin);
  r.flows_moved = flows.size();
  for (std::uint32_t slot : flows) {
    if (slot >= violated.size()) violated.resize(slot + 1, 0);
    if (!violated[slot]) {
      violated[slot] = 1;
      ++r.newly_violated;
    }
  }
  table.move_bin(r.bin, r.to);
  return r;
}

namespace {

struct Departure {
  double t;
  std::uint32_t slot;
  bool operator>(const Departure& o) const { return t > o.t; }
};

}  // namespace

BinSimStats run_bin_sim(const SimConfig& config) {
  validate_config(config);
  const auto* cfg = std::get_if<scheme::BinBased>(&config.scheme);
  if (!cfg) throw ValidationError("run_bin_sim needs a bin-based scheme");
  const auto& params = config.params;
  const std::size_t n = params.n;
  const double arrival_rate = static_cast<double>(n) * params.lambda;
  const double departure_rate = 1.0 / params.beta;
  const double t_start = config.warmup_time();
  const double t_end = t_start + config.horizon_time();
  const std::size_t tracked = config.tracked_server;
  const int low = cfg->l;
  const std::optional<int> high =
      cfg->h.is_finite() ? std::optional<int>(cfg->h.value()) : std::nullopt;

  Rng rng(config.seed);
  BinTable table(cfg->m, n);
  std::vector<int> occ(n, 0);
  IndexedSet invite(n);
  IndexedSet below_high(n);
  for (std::size_t s = 0; s < n; ++s) {
    invite.set(s, 0 < low);
    below_high.set(s, !high || 0 < *high);
  }
  OccupancyRecorder recorder(n, t_start);
  OccupancyRecorder tracked_recorder(1, t_start);
  BinSimStats stats;
  bool window_open = false;

  std::vector<std::uint32_t> flow_bin;
  std::vector<std::uint8_t> violated;
  std::vector<std::uint32_t> free_slots;
  std::vector<Departure> heap;
  std::uint64_t next_flow_id = 0;

  auto set_occ = [&](std::size_t s, int value, double t) {
    const int old = occ[s];
    if (old == value) return;
    recorder.change(static_cast<std::size_t>(old), static_cast<std::size_t>(value), t);
    if (s == tracked) {
      tracked_recorder.change(static_cast<std::size_t>(old), static_cast<std::size_t>(value), t);
      if (config.record_series && window_open) stats.series.emplace_back(t, value);
    }
    occ[s] = value;
    invite.set(s, value < low);
    below_high.set(s, !high || value < *high);
  };

  double next_arrival = rng.exponential(arrival_rate);
  for (;;) {
    const bool arrival = heap.empty() || next_arrival < heap.front().t;
    const double t = arrival ? next_arrival : heap.front().t;
    if (t > t_end) break;
    if (!window_open && t >= t_start) {
      window_open = true;
      if (config.record_series) stats.series.emplace_back(t_start, occ[tracked]);
    }
    ++stats.events;

    if (!arrival) {
      std::pop_heap(heap.begin(), heap.end(), std::greater<>{});
      const std::uint32_t slot = heap.back().slot;
      heap.pop_back();
      const std::size_t bin = flow_bin[slot];
      const std::size_t s = table.server_of(bin);
      table.remove_flow(bin, slot);
      free_slots.push_back(slot);
      set_occ(s, occ[s] - 1, t);
      continue;
    }

    next_arrival = t + rng.exponential(arrival_rate);
    if (window_open) ++stats.total_flows;
    std::uint32_t slot;
    if (!free_slots.empty()) {
      slot = free_slots.back();
      free_slots.pop_back();
    } else {
      slot = static_cast<std::uint32_t>(flow_bin.size());
      flow_bin.push_back(0);
      violated.push_back(0);
    }
    const std::size_t bin = hash_flow_to_bin(next_flow_id++, cfg->m);
    flow_bin[slot] = static_cast<std::uint32_t>(bin);
    violated[slot] = 0;
    table.add_flow(bin, slot);
    heap.push_back({t + rng.exponential(departure_rate), slot});
    std::push_heap(heap.begin(), heap.end(), std::greater<>{});
    const std::size_t s = table.server_of(bin);
    set_occ(s, occ[s] + 1, t);

    const bool trigger =
        high && (occ[s] == *high + 1 || (cfg->move_while_above && occ[s] > *high));
    if (!trigger) continue;
    const Reallocation r = reallocate_bin(table, s, invite, below_high, violated, rng);
    if (r.anomaly) {
      ++stats.anomalies;
      continue;
    }
    if (!r.moved) {
      ++stats.self_moves;
      continue;
    }
    const int moved = static_cast<int>(r.flows_moved);
    set_occ(r.from, occ[r.from] - moved, t);
    set_occ(r.to, occ[r.to] + moved, t);
    if (window_open) {
      ++stats.reallocations;
      stats.violated_flows += r.newly_violated;
    }
  }

  stats.violations = stats.violated_flows;
  stats.transferred = stats.violated_flows;
  stats.occupancy_hist = recorder.finish(t_end);
  stats.tracked_hist = tracked_recorder.finish(t_end);
  stats.measured_time = config.horizon_time();
  for (std::size_t k = 1; k < stats.occupancy_hist.size(); ++k) {
    stats.mean_occ += static_cast<double>(k) * stats.occupancy_hist[k];
  }
  return stats;
}

}  // namespace stickysim
