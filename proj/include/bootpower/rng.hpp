#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bootpower {

// SplitMix64 finalizer (Steele, Lea & Flood 2014). Stable across platforms;
// every derived seed in the library goes through this function.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// mix(seed, key) = splitmix64(seed ^ splitmix64(key)).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
  return splitmix64(seed ^ splitmix64(key));
}

// Sub-stream tags. Values are part of the reproducibility contract.
enum class StreamTag : std::uint64_t {
  baseline_bootstrap = 1,
  randomization = 2,
  intervention_bootstrap = 3,
  effect = 4,
  lab_reference = 5,
  lab_treated = 6,
};

// A seeded random stream. All variates are derived from raw 64-bit
// mt19937_64 output with explicit transforms, so results are bit-identical
// across standard libraries (std::*_distribution are implementation-defined).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Stream derive(StreamTag tag, std::uint64_t index = 0) const {
    return Stream(mix_seed(mix_seed(seed_, static_cast<std::uint64_t>(tag)), index));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Unbiased integer in [0, n) by Lemire's multiply-and-reject method.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; the second variate of each pair is discarded so that a draw
  // consumes a fixed number of engine outputs.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double exponential(double mean) { return -mean * std::log(uniform_open()); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace bootpower
