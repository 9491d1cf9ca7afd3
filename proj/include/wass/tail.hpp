#pragma once

#include <algorithm>
#include <cstddef>
#include <span>

#include "wass/point.hpp"

namespace wass {

/// Minimum of the last `window` values: the finite stand-in for liminf.
inline double tail_liminf(std::span<const double> values, std::size_t window) {
  if (values.empty()) throw InvalidArgument("tail_liminf of an empty list");
  if (window < 1 || window > values.size())
    throw InvalidArgument("tail window must lie in [1, length]");
  return *std::min_element(values.end() - static_cast<std::ptrdiff_t>(window), values.end());
}

/// Maximum of the last `window` values.
inline double tail_max(std::span<const double> values, std::size_t window) {
  if (values.empty()) throw InvalidArgument("tail_max of an empty list");
  if (window < 1 || window > values.size())
    throw InvalidArgument("tail window must lie in [1, length]");
  return *std::max_element(values.end() - static_cast<std::ptrdiff_t>(window), values.end());
}

/// max(5, length / 4), clipped to the length.
inline std::size_t default_window(std::size_t length) {
  return std::min(length, std::max<std::size_t>(5, length / 4));
}

}  // namespace wass
