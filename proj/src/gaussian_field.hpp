#pragma once

// Counter-based standard normal field: entry (row_key, col) is a pure function
// of its coordinates, so any segment can be produced on demand.

#include <cstddef>
#include <cstdint>

namespace ssdm::detail {

std::uint64_t field_row_key(std::uint64_t block_key, std::size_t row) noexcept;

/// Writes standard normal values of columns [col_begin, col_begin + count).
/// Values are single precision: 23-bit uniforms mapped through an inverse
/// normal cdf accurate to about 1e-7.
void fill_standard_normal(std::uint64_t row_key, std::size_t col_begin, std::size_t count, float* out) noexcept;

} // namespace ssdm::detail
