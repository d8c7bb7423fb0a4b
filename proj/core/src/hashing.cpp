#include "dip/hashing.hpp"

#include <array>
#include <cstring>

namespace dip {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string matrix_content_hash(const Matrix& m) {
  std::uint64_t h = fnv1a64(nullptr, 0);
  const std::uint64_t dims[2] = {m.rows(), m.cols()};
  h = fnv1a64(dims, sizeof(dims), h);
  if (!m.data().empty()) {
    h = fnv1a64(m.data().data(), m.data().size() * sizeof(double), h);
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace dip
