#include "stickysim/flow_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stickysim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

struct Departure {
  double t;
  std::uint32_t slot;
  bool operator>(const Departure& o) const { return t > o.t; }
};

}  // namespace

void validate_config(const SimConfig& config) {
  validate_params(config.params);
  validate_scheme(config.scheme);
  if (config.params.n >= IndexedSet::kAbsent) throw ValidationError("too many servers");
  if (!(config.horizon_time() > 0.0)) throw ValidationError("horizon must be positive");
  if (!(config.warmup_time() >= 0.0)) throw ValidationError("warmup must be non-negative");
  if (config.tracked_server >= config.params.n) {
    throw ValidationError("tracked_server must be below n");
  }
}

FlowDistribution SimStats::distribution() const {
  std::vector<double> pmf = occupancy_hist;
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return FlowDistribution(std::move(pmf));
}

Dispatcher::Dispatcher(const SchemeConfig& scheme, std::span<const int> occupancy)
    : scheme_(scheme) {
  validate_scheme(scheme);
  const std::size_t n = occupancy.size();
  if (n == 0) throw ValidationError("dispatcher needs at least one server");
  std::visit(overloaded{
                 [&](const scheme::PowerOfD& c) {
                   use_buckets_ = c.is_jsq() || static_cast<std::size_t>(c.d) >= n;
                 },
                 [&](const scheme::PullBased& c) {
                   low_ = c.l;
                   if (c.h.is_finite()) high_ = c.h.value();
                   use_sets_ = true;
                 },
                 [&](const scheme::Shedding& c) {
                   if (c.h.is_finite()) high_ = c.h.value();
                 },
                 [&](const scheme::TransferToInvite& c) {
                   low_ = c.l;
                   high_ = c.h;
                   use_sets_ = true;
                 },
                 [&](const scheme::TransferToLeastLoaded& c) {
                   high_ = c.h;
                   use_buckets_ = true;
                 },
                 [](const scheme::BinBased&) {
                   throw ValidationError("bin-based routing is simulated by run_bin_sim");
                 },
             },
             scheme);
  if (use_sets_) {
    invite_ = IndexedSet(n);
    below_high_ = IndexedSet(n);
  }
  if (use_buckets_) buckets_ = LevelBuckets(n);
  for (std::size_t s = 0; s < n; ++s) update(s, 0, occupancy[s]);
}

void Dispatcher::update(std::size_t server, int /*old_occ*/, int new_occ) {
  if (use_sets_) {
    invite_.set(server, new_occ < low_);
    if (high_) below_high_.set(server, new_occ < *high_);
  }
  if (use_buckets_) buckets_.move(server, static_cast<std::size_t>(new_occ));
}

std::size_t Dispatcher::power_of_d(std::span<const int> occupancy, int d, Rng& rng) const {
  const std::size_t n = occupancy.size();
  std::size_t picked[64];
  std::vector<std::size_t> overflow;
  std::size_t* sample = picked;
  if (d > 64) {
    overflow.resize(static_cast<std::size_t>(d));
    sample = overflow.data();
  }
  std::size_t best = 0;
  int best_occ = 0;
  std::size_t ties = 0;
  for (int k = 0; k < d; ++k) {
    std::size_t s = 0;
    for (;;) {
      s = rng.below(n);
      if (std::find(sample, sample + k, s) == sample + k) break;
    }
    sample[k] = s;
    if (k == 0 || occupancy[s] < best_occ) {
      best = s;
      best_occ = occupancy[s];
      ties = 1;
    } else if (occupancy[s] == best_occ && rng.below(++ties) == 0) {
      best = s;
    }
  }
  return best;
}

std::optional<std::size_t> Dispatcher::pull_target(Rng& rng) const {
  if (!invite_.empty()) return invite_.sample(rng);
  if (high_ && !below_high_.empty()) return below_high_.sample(rng);
  return std::nullopt;
}

Assignment Dispatcher::assign(std::span<const int> occupancy, Rng& rng) const {
  const std::size_t n = occupancy.size();
  auto at_high = [&](std::size_t s) { return high_ && occupancy[s] >= *high_; };
  return std::visit(
      overloaded{
          [&](const scheme::PowerOfD& c) -> Assignment {
            if (use_buckets_) return {buckets_.sample_min(rng), std::nullopt, false};
            if (c.d == 1) return {sample_uniform(n, rng), std::nullopt, false};
            return {power_of_d(occupancy, c.d, rng), std::nullopt, false};
          },
          [&](const scheme::PullBased&) -> Assignment {
            if (auto t = pull_target(rng)) return {*t, std::nullopt, false};
            return {sample_uniform(n, rng), std::nullopt, false};
          },
          [&](const scheme::Shedding&) -> Assignment {
            const std::size_t s = sample_uniform(n, rng);
            if (at_high(s)) return {std::nullopt, s, true};
            return {s, std::nullopt, false};
          },
          [&](const scheme::TransferToInvite&) -> Assignment {
            const std::size_t s = sample_uniform(n, rng);
            if (!at_high(s)) return {s, std::nullopt, false};
            return {pull_target(rng), s, true};
          },
          [&](const scheme::TransferToLeastLoaded&) -> Assignment {
            const std::size_t s = sample_uniform(n, rng);
            if (!at_high(s)) return {s, std::nullopt, false};
            return {buckets_.sample_min(rng), s, true};
          },
          [](const scheme::BinBased&) -> Assignment {
            throw ValidationError("bin-based routing is simulated by run_bin_sim");
          },
      },
      scheme_);
}

Assignment assign_flow(const SchemeConfig& scheme, std::span<const int> occupancy, Rng& rng) {
  for (int k : occupancy) {
    if (k < 0) throw ValidationError("occupancies must be non-negative");
  }
  Dispatcher dispatcher(scheme, occupancy);
  return dispatcher.assign(occupancy, rng);
}

SimStats run_flow_sim(const SimConfig& config) {
  validate_config(config);
  if (std::holds_alternative<scheme::BinBased>(config.scheme)) {
    throw ValidationError("bin-based scheme: use run_bin_sim");
  }
  const auto& params = config.params;
  const std::size_t n = params.n;
  const double arrival_rate = static_cast<double>(n) * params.lambda;
  const double departure_rate = 1.0 / params.beta;
  const double t_start = config.warmup_time();
  const double t_end = t_start + config.horizon_time();
  const std::size_t tracked = config.tracked_server;
  const bool move_existing = std::visit(
      overloaded{
          [](const scheme::TransferToInvite& c) { return c.move_existing_flow; },
          [](const scheme::TransferToLeastLoaded& c) { return c.move_existing_flow; },
          [](const auto&) { return false; },
      },
      config.scheme);

  Rng rng(config.seed);
  std::vector<int> occ(n, 0);
  Dispatcher dispatcher(config.scheme, occ);
  OccupancyRecorder recorder(n, t_start);
  OccupancyRecorder tracked_recorder(1, t_start);
  SimStats stats;
  bool window_open = false;

  // Flow slots: the server each active flow sits on, and its index in that
  // server's flow list (kept only when existing flows can be moved).
  std::vector<std::uint32_t> flow_server;
  std::vector<std::uint32_t> flow_pos;
  std::vector<std::uint32_t> free_slots;
  std::vector<std::vector<std::uint32_t>> server_flows(move_existing ? n : 0);
  std::vector<Departure> heap;
  heap.reserve(static_cast<std::size_t>(params.rho() * static_cast<double>(n) * 1.5) + 16);

  auto set_occ = [&](std::size_t s, int value, double t) {
    const int old = occ[s];
    recorder.change(static_cast<std::size_t>(old), static_cast<std::size_t>(value), t);
    if (s == tracked) {
      tracked_recorder.change(static_cast<std::size_t>(old), static_cast<std::size_t>(value), t);
      if (config.record_series && window_open) stats.series.emplace_back(t, value);
    }
    occ[s] = value;
    dispatcher.update(s, old, value);
  };

  auto attach = [&](std::uint32_t slot, std::size_t s) {
    flow_server[slot] = static_cast<std::uint32_t>(s);
    if (move_existing) {
      flow_pos[slot] = static_cast<std::uint32_t>(server_flows[s].size());
      server_flows[s].push_back(slot);
    }
  };
  auto detach = [&](std::uint32_t slot) {
    if (!move_existing) return;
    auto& list = server_flows[flow_server[slot]];
    const std::uint32_t last = list.back();
    list[flow_pos[slot]] = last;
    flow_pos[last] = flow_pos[slot];
    list.pop_back();
  };

  auto start_flow = [&](std::size_t s, double t) {
    std::uint32_t slot;
    if (!free_slots.empty()) {
      slot = free_slots.back();
      free_slots.pop_back();
    } else {
      slot = static_cast<std::uint32_t>(flow_server.size());
      flow_server.push_back(0);
      flow_pos.push_back(0);
    }
    attach(slot, s);
    heap.push_back({t + rng.exponential(departure_rate), slot});
    std::push_heap(heap.begin(), heap.end(), std::greater<>{});
    set_occ(s, occ[s] + 1, t);
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
      const std::size_t s = flow_server[slot];
      detach(slot);
      free_slots.push_back(slot);
      set_occ(s, occ[s] - 1, t);
      continue;
    }

    next_arrival = t + rng.exponential(arrival_rate);
    const Assignment a = dispatcher.assign(occ, rng);
    if (window_open) {
      ++stats.total_flows;
      if (a.violation) {
        ++stats.violations;
        ++(a.server ? stats.transferred : stats.discarded);
      }
    }
    if (!a.server) continue;
    const std::size_t dest = *a.server;
    if (move_existing && a.selected && *a.selected != dest && !server_flows[*a.selected].empty()) {
      // The arriving flow stays on the selected server; one of its existing
      // flows is moved to the destination instead.
      const std::size_t src = *a.selected;
      const auto& list = server_flows[src];
      const std::uint32_t moved = list[rng.below(list.size())];
      detach(moved);
      attach(moved, dest);
      set_occ(dest, occ[dest] + 1, t);
      set_occ(src, occ[src] - 1, t);
      start_flow(src, t);
      continue;
    }
    start_flow(dest, t);
  }

  stats.occupancy_hist = recorder.finish(t_end);
  stats.tracked_hist = tracked_recorder.finish(t_end);
  stats.measured_time = config.horizon_time();
  for (std::size_t k = 1; k < stats.occupancy_hist.size(); ++k) {
    stats.mean_occ += static_cast<double>(k) * stats.occupancy_hist[k];
  }
  return stats;
}

double empirical_vs_theory(const SimStats& stats, const FlowDistribution& theory) {
  return total_variation(stats.occupancy_hist, theory.pmf());
}

}  // namespace stickysim
