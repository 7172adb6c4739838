#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace biascal {

/// SplitMix64 output function (Steele, Lea & Flood).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Identifies an independent random stream by a seed and a hierarchical path
/// (replication -> run index -> evaluation slot).
///
/// The path is stored as a running digest, so deriving a child key is a pure
/// O(1) operation with no allocation. Two keys compare equal iff they have the
/// same seed and were derived along the same path (up to 64-bit collisions).
class StreamKey {
 public:
  constexpr explicit StreamKey(std::uint64_t seed) noexcept
      : seed_(seed), digest_(mix64(seed ^ 0x6A09E667F3BCC909ULL)), depth_(0) {}

  static StreamKey from_path(std::uint64_t seed, std::span<const std::uint64_t> path) noexcept {
    StreamKey key(seed);
    for (auto p : path) key = key.child(p);
    return key;
  }
  static StreamKey from_path(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    return from_path(seed, std::span<const std::uint64_t>(path.begin(), path.size()));
  }

  constexpr StreamKey child(std::uint64_t index) const noexcept {
    StreamKey k = *this;
    k.digest_ = mix64(digest_ ^ mix64(index + 0x9E3779B97F4A7C15ULL * (depth_ + 1)));
    k.depth_ = depth_ + 1;
    return k;
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t digest() const noexcept { return digest_; }
  constexpr std::uint32_t depth() const noexcept { return depth_; }

  friend constexpr bool operator==(const StreamKey&, const StreamKey&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t digest_;
  std::uint32_t depth_;
};

/// Counter-based generator over a StreamKey. Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(const StreamKey& key) noexcept : key_(key.digest()) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal variate (Box-Muller, one pair cached).
  double normal() noexcept;

  /// Unit-rate exponential by inverse transform.
  double exponential() noexcept;

  /// +1 or -1 with equal probability.
  double rademacher() noexcept { return ((*this)() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace biascal
