#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace spear {

/// xoshiro256** seeded through splitmix64. Every random draw in the project
/// goes through this generator so corpora regenerate identically on any
/// platform; std:: distributions are avoided because their algorithms are
/// implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] (inclusive), rejection-sampled.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();
  bool coin() { return ((*this)() >> 63) != 0; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent stage seed from a master seed and a stage label:
/// splitmix64 applied to master XOR FNV-1a-64(label).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
/// Derives the seed of the index-th item of a stage.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace spear
