#pragma once

#include <cstdint>
#include <vector>

namespace dip {

/// Deterministic 64-bit PRNG (splitmix64 core, Box-Muller gaussians).
/// The stdlib distributions are implementation-defined, so every draw
/// here is produced by code we own: identical seeds give identical
/// streams on any build of this library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed), seed_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform in (0, 1]; never returns exactly zero.
  double uniform_open();

  /// N(mean, sigma^2) draw.
  double gaussian(double mean = 0.0, double sigma = 1.0);

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  /// Independent deterministic substream for a fixed purpose tag.
  Rng child(std::uint64_t tag) const;

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.empty()) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = index(i + 1);
      std::swap(v[i], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t state_;
  std::uint64_t seed_;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

}  // namespace dip
