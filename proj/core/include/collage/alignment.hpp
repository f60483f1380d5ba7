#pragma once

#include <cstdint>
#include <utility>

#include "collage/segment.hpp"

namespace collage {

/// Row-major 2x3 matrix mapping source pixel coordinates to destination
/// frame coordinates: (x, y) -> (a x + b y + tx, c x + d y + ty).
struct AffineTransform2D {
  double a = 1.0, b = 0.0, tx = 0.0;
  double c = 0.0, d = 1.0, ty = 0.0;

  static AffineTransform2D identity() { return {}; }
  static AffineTransform2D translation(double dx, double dy) {
    return {1.0, 0.0, dx, 0.0, 1.0, dy};
  }

  double determinant() const { return a * d - b * c; }
  std::pair<double, double> apply(double x, double y) const {
    return {a * x + b * y + tx, c * x + d * y + ty};
  }
  /// Throws invalid_input when the linear part is singular.
  AffineTransform2D inverse() const;

  friend bool operator==(const AffineTransform2D&, const AffineTransform2D&) = default;
};

struct FitOptions {
  bool allow_rotation = false;
  /// Principal-axis rotation engages only when both masks' std-dev ratio
  /// along their principal axes is at least this much.
  double min_anisotropy = 1.5;
  double scale_min = 0.25;
  double scale_max = 4.0;
};

/// Closed-form alignment of src onto dst: per-axis scale from tight-bbox
/// extents (degenerate 1-px axes borrow the other axis's scale), optional
/// principal-axis rotation from second moments, translation mapping the src
/// centroid onto the dst centroid. Scales are clamped to
/// [scale_min, scale_max]. Both masks must be nonempty.
AffineTransform2D fit_alignment(const PlacedMask& src, const PlacedMask& dst,
                                const FitOptions& options = {});

/// Resample a segment through `t` into `frame`. Color is bilinear through the
/// inverse map; the mask is bilinear thresholded at 0.5; output clipped to
/// the frame, color kept zero off-mask. A transform that lands nowhere in
/// frame yields an empty segment.
PlacedSegment warp_segment(const PlacedSegment& segment, const AffineTransform2D& t,
                           const FrameSize& frame);

struct PerturbationSpec {
  double max_translation = 0.0;    // px, per axis
  double scale_min = 1.0;          // per-axis scale ratio range
  double scale_max = 1.0;
  double max_rotation_deg = 0.0;
  double max_crop_fraction = 0.0;  // of bbox extent per axis, in [0, 1)
  std::uint64_t seed = 0;
};

/// Random affine within the spec's ranges (about the mask centroid) followed
/// by a random axis-aligned crop. All-zero ranges reproduce the input;
/// deterministic for a fixed seed.
PlacedSegment perturb_segment(const PlacedSegment& segment, const PerturbationSpec& spec);

}  // namespace collage
