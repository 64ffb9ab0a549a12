#pragma once

// Incrementally maintained server indices shared by the simulators.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "stickysim/rng.hpp"

namespace stickysim {

/// Subset of 0..n-1 with O(1) insert, erase and uniform sampling.
class IndexedSet {
 public:
  static constexpr std::uint32_t kAbsent = 0xffffffffu;

  explicit IndexedSet(std::size_t n = 0) : pos_(n, kAbsent) {}

  [[nodiscard]] bool contains(std::size_t x) const { return pos_[x] != kAbsent; }
  [[nodiscard]] bool empty() const { return items_.empty(); }
  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] const std::vector<std::uint32_t>& items() const { return items_; }

  void insert(std::size_t x) {
    if (contains(x)) return;
    pos_[x] = static_cast<std::uint32_t>(items_.size());
    items_.push_back(static_cast<std::uint32_t>(x));
  }

  void erase(std::size_t x) {
    const std::uint32_t at = pos_[x];
    if (at == kAbsent) return;
    const std::uint32_t last = items_.back();
    items_[at] = last;
    pos_[last] = at;
    items_.pop_back();
    pos_[x] = kAbsent;
  }

  void set(std::size_t x, bool member) { member ? insert(x) : erase(x); }

  /// Precondition: !empty().
  std::size_t sample(Rng& rng) const { return items_[rng.below(items_.size())]; }

 private:
  std::vector<std::uint32_t> items_;
  std::vector<std::uint32_t> pos_;
};

/// Servers grouped by occupancy, with the minimum occupied level tracked.
class LevelBuckets {
 public:
  explicit LevelBuckets(std::size_t n = 0) : pos_(n, 0), level_(n, 0), buckets_(1) {
    buckets_[0].reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
      pos_[s] = static_cast<std::uint32_t>(s);
      buckets_[0].push_back(static_cast<std::uint32_t>(s));
    }
  }

  void move(std::size_t server, std::size_t to) {
    const std::size_t from = level_[server];
    if (from == to) return;
    auto& src = buckets_[from];
    const std::uint32_t last = src.back();
    src[pos_[server]] = last;
    pos_[last] = pos_[server];
    src.pop_back();
    if (to >= buckets_.size()) buckets_.resize(to + 1);
    pos_[server] = static_cast<std::uint32_t>(buckets_[to].size());
    buckets_[to].push_back(static_cast<std::uint32_t>(server));
    level_[server] = to;
    if (to < min_) {
      min_ = to;
    } else {
      while (buckets_[min_].empty()) ++min_;
    }
  }

  [[nodiscard]] std::size_t min_level() const { return min_; }
  [[nodiscard]] std::size_t level(std::size_t server) const { return level_[server]; }
  [[nodiscard]] const std::vector<std::uint32_t>& at(std::size_t level) const {
    return buckets_[level];
  }

  /// Uniform among the servers at the minimum level.
  std::size_t sample_min(Rng& rng) const {
    const auto& b = buckets_[min_];
    return b[rng.below(b.size())];
  }

 private:
  std::vector<std::uint32_t> pos_;
  std::vector<std::size_t> level_;
  std::vector<std::vector<std::uint32_t>> buckets_;
  std::size_t min_ = 0;
};

/// Time integrals of per-level server counts over a measurement window,
/// updated lazily whenever a level's count changes.
class OccupancyRecorder {
 public:
  OccupancyRecorder(std::size_t n, double window_start)
      : count_(1, n), area_(1, 0.0), last_(1, 0.0), start_(window_start) {}

  void change(std::size_t from, std::size_t to, double t) {
    if (to >= count_.size()) grow(to + 1);
    flush(from, t);
    flush(to, t);
    --count_[from];
    ++count_[to];
  }

  /// Time-weighted fraction of servers at each level over [start, t_end].
  [[nodiscard]] std::vector<double> finish(double t_end) {
    std::vector<double> out(count_.size());
    double total = 0.0;
    for (std::size_t k = 0; k < count_.size(); ++k) {
      flush(k, t_end);
      total += area_[k];
    }
    for (std::size_t k = 0; k < count_.size(); ++k) out[k] = total > 0.0 ? area_[k] / total : 0.0;
    while (out.size() > 1 && out.back() == 0.0) out.pop_back();
    return out;
  }

 private:
  void grow(std::size_t len) {
    count_.resize(len, 0);
    area_.resize(len, 0.0);
    last_.resize(len, 0.0);
  }

  void flush(std::size_t k, double t) {
    const double from = last_[k] > start_ ? last_[k] : start_;
    if (t > from) area_[k] += static_cast<double>(count_[k]) * (t - from);
    last_[k] = t;
  }

  std::vector<std::size_t> count_;
  std::vector<double> area_;
  std::vector<double> last_;
  double start_;
};

}  // namespace stickysim
