#pragma once

#include <cstdint>

#include "collage/grid.hpp"

namespace collage {

/// Squared distances never reach this; pixels with no set pixel anywhere get
/// exactly this value.
inline constexpr std::int32_t kUnreachableDistance = 1 << 30;

/// Exact squared Euclidean distance from every pixel to the nearest set
/// (nonzero) pixel, measured center-to-center. Set pixels get 0. Uses the
/// two-pass lower-envelope transform, exact for integer grids.
Grid<std::int32_t> squared_distance_to_set(const MaskGrid& mask);

}  // namespace collage
