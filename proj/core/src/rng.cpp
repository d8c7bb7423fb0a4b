#include "dip/rng.hpp"

#include <cmath>
#include <numbers>

namespace dip {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::gaussian(double mean, double sigma) {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return mean + sigma * cached_gaussian_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_gaussian_ = true;
  return mean + sigma * radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  // Rejection-free enough for desk scale: 64-bit draw modulo n has
  // bias < 2^-53 for any n we ever pass.
  return static_cast<std::size_t>(next_u64() % n);
}

Rng Rng::child(std::uint64_t tag) const {
  std::uint64_t s = seed_ ^ (0xD1B54A32D192ED03ULL * (tag + 1));
  // One mix round so adjacent tags land far apart.
  std::uint64_t st = s;
  return Rng(splitmix64(st));
}

}  // namespace dip
