#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace cpstir {

/// Reproducible random source keyed by (master seed, label path).
///
/// Draws are splitmix64 outputs in counter mode: the n-th draw is a bijective
/// mix of `key + n * gamma`. A child stream rehashes the parent key with one
/// more label component, so the per-replication, per-clock and per-mark streams
/// of a simulation can be derived lazily and independently of each other. The
/// label path itself is not stored; only its hash is.
///
/// Streams are single-owner values. Copying a stream copies its position, so a
/// copy replays the same draws.
class SeededStream {
 public:
  using result_type = std::uint64_t;

  explicit SeededStream(std::uint64_t master_seed, std::string_view label = "root");

  /// Stream for the label path `<this>/<label>`.
  [[nodiscard]] SeededStream child(std::string_view label) const;
  /// Stream for the label path `<this>/<index>`; cheaper than formatting the
  /// index as text and distinct from `child(std::to_string(index))`.
  [[nodiscard]] SeededStream child(std::uint64_t index) const;

  std::uint64_t next_u64() noexcept {
    counter_ += kGamma;
    return mix(key_ + counter_);
  }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    __extension__ using u128 = unsigned __int128;
    const auto wide = static_cast<u128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t key() const noexcept { return key_; }

  // UniformRandomBitGenerator
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  SeededStream(std::uint64_t master_seed, std::uint64_t key, int) noexcept
      : master_seed_(master_seed), key_(key) {}

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  std::uint64_t master_seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cpstir
