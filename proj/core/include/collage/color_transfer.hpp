#pragma once

#include <array>

#include "collage/segment.hpp"

namespace collage {

/// Per-channel lαβ statistics over a masked pixel set (population std dev).
struct LabStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
  std::int64_t count = 0;
};

/// RGB ([0,1]) -> decorrelated log-space lαβ. The RGB->LMS matrix is the
/// standard published one; LMS values are clamped to 1e-5 before the log.
std::array<double, 3> rgb_to_lab(const std::array<double, 3>& rgb);

/// lαβ -> RGB, unclamped. Uses the double-precision inverse of the forward
/// matrix (the widely quoted 4-decimal inverse is only approximate and would
/// not round-trip).
std::array<double, 3> lab_to_rgb(const std::array<double, 3>& lab);

LabStats lab_stats(const ImageRgbF& color, const MaskGrid& mask);

/// Statistics matching in lαβ: per channel subtract the source mean, scale
/// by ref/src std dev, add the reference mean. Channels whose source std dev
/// is below 1e-6 shift means only. Operates in place on masked pixels;
/// output RGB is not clamped.
void transfer_lab_inplace(ImageRgbF& color, const MaskGrid& mask, const LabStats& ref);

/// 8-bit convenience wrapper: transfer toward the reference segment's masked
/// statistics, then clamp and quantize.
PlacedSegment reinhard_transfer(const PlacedSegment& src, const SegmentRecord& ref);

ImageRgbF to_float(const ImageRgb8& image);
ImageRgb8 to_u8(const ImageRgbF& image);

}  // namespace collage
