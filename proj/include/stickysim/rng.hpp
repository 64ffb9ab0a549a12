#pragma once

// Counter-based generator: output k of stream (seed, stream) is the
// splitmix64 finalizer of seed_key + k * golden. Variates are built by hand
// (no <random> distributions) so runs are identical across standard libraries.

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace stickysim {

__extension__ using uint128_t = unsigned __int128;

/// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

class Rng {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(seed ^ mix64(stream + kGolden))) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Exponential with the given rate, by inversion.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  /// Uniform integer on [0, n), unbiased (Lemire's multiply-and-reject). n > 0.
  std::size_t below(std::size_t n) {
    const auto bound = static_cast<std::uint64_t>(n);
    auto m = static_cast<uint128_t>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<uint128_t>(next_u64()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  [[nodiscard]] std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace stickysim
