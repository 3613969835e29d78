#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace gsbag {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Labels for the independent random streams used across the library. Every
/// stream is addressed by (master seed, tag, indices...), so the values a task
/// sees never depend on which thread runs it or in what order.
enum class StreamTag : std::uint64_t {
  bagging = 1,
  sim_truth = 2,
  sim_dataset = 3,
  sim_bagging = 4,
  posterior = 5,
};

/// xoshiro256** with counter-style substream derivation.
///
/// Satisfies UniformRandomBitGenerator, so it can drive boost/std distributions.
/// `uniform_index` is implemented here (Lemire's multiply-shift with rejection)
/// so that resampling is reproducible independently of any library's
/// distribution code.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm += 0x9E3779B97F4A7C15ULL;
      word = mix64(sm);
    }
  }

  /// Stream keyed by a master seed and a path of indices.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t key = mix64(seed);
    for (std::uint64_t id : path) key = mix64(key ^ mix64(id + 0x9E3779B97F4A7C15ULL));
    return Rng(key);
  }

  static Rng substream(std::uint64_t seed, StreamTag tag,
                       std::initializer_list<std::uint64_t> indices = {}) noexcept {
    std::uint64_t key = mix64(seed);
    key = mix64(key ^ mix64(static_cast<std::uint64_t>(tag) + 0x9E3779B97F4A7C15ULL));
    for (std::uint64_t id : indices) key = mix64(key ^ mix64(id + 0x9E3779B97F4A7C15ULL));
    return Rng(key);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  __extension__ using u128 = unsigned __int128;

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    u128 m = static_cast<u128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<u128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace gsbag
