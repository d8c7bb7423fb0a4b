#pragma once

#include <cstdint>
#include <string>

#include "dip/matrix.hpp"

namespace dip {

/// 64-bit FNV-1a over a byte range.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Content hash of a matrix: dimensions followed by the raw little-endian
/// bytes of every entry, as a 16-character lowercase hex digest.
std::string matrix_content_hash(const Matrix& m);

}  // namespace dip
