#include "collage/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "collage/error.hpp"
#include "collage/rng.hpp"

namespace collage {

AffineTransform2D AffineTransform2D::inverse() const {
  const double det = determinant();
  if (std::abs(det) < 1e-12) {
    fail(ErrorKind::invalid_input, "affine transform is singular");
  }
  const double ia = d / det;
  const double ib = -b / det;
  const double ic = -c / det;
  const double id = a / det;
  return {ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty)};
}

namespace {

struct MaskMoments {
  double cx = 0.0, cy = 0.0;       // centroid, pixel-center convention
  double mu20 = 0.0, mu02 = 0.0;   // second central moments
  double mu11 = 0.0;
  std::int64_t area = 0;

  /// Ratio of principal standard deviations (>= 1).
  double anisotropy() const {
    const double tr = mu20 + mu02;
    const double diff = mu20 - mu02;
    const double radius = std::sqrt(diff * diff + 4.0 * mu11 * mu11);
    const double lo = (tr - radius) / 2.0;
    const double hi = (tr + radius) / 2.0;
    if (lo <= 1e-12) return std::numeric_limits<double>::infinity();
    return std::sqrt(hi / lo);
  }

  double principal_angle() const { return 0.5 * std::atan2(2.0 * mu11, mu20 - mu02); }
};

MaskMoments mask_moments(const PlacedMask& placed) {
  MaskMoments m;
  double sx = 0.0, sy = 0.0;
  for (int y = 0; y < placed.box.h; ++y) {
    for (int x = 0; x < placed.box.w; ++x) {
      if (!placed.mask(x, y)) continue;
      ++m.area;
      sx += placed.box.x0 + x + 0.5;
      sy += placed.box.y0 + y + 0.5;
    }
  }
  if (m.area == 0) return m;
  m.cx = sx / m.area;
  m.cy = sy / m.area;
  for (int y = 0; y < placed.box.h; ++y) {
    for (int x = 0; x < placed.box.w; ++x) {
      if (!placed.mask(x, y)) continue;
      const double dx = placed.box.x0 + x + 0.5 - m.cx;
      const double dy = placed.box.y0 + y + 0.5 - m.cy;
      m.mu20 += dx * dx;
      m.mu02 += dy * dy;
      m.mu11 += dx * dy;
    }
  }
  m.mu20 /= m.area;
  m.mu02 /= m.area;
  m.mu11 /= m.area;
  return m;
}

/// Smallest rotation (mod pi, axes are undirected) taking one principal
/// angle to the other.
double wrap_half_turn(double angle) {
  while (angle > std::numbers::pi / 2.0) angle -= std::numbers::pi;
  while (angle <= -std::numbers::pi / 2.0) angle += std::numbers::pi;
  return angle;
}

float bilinear_mask(const MaskGrid& mask, double lx, double ly) {
  // lx, ly are local coordinates; pixel i covers [i, i+1) with center i+0.5.
  const double fx = lx - 0.5;
  const double fy = ly - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double wx = fx - x0;
  const double wy = fy - y0;
  auto at = [&](int x, int y) -> double {
    return (x >= 0 && x < mask.width() && y >= 0 && y < mask.height() && mask(x, y)) ? 1.0 : 0.0;
  };
  return static_cast<float>((1 - wx) * (1 - wy) * at(x0, y0) + wx * (1 - wy) * at(x0 + 1, y0) +
                            (1 - wx) * wy * at(x0, y0 + 1) + wx * wy * at(x0 + 1, y0 + 1));
}

Rgbf bilinear_color(const ImageRgb8& color, double lx, double ly) {
  const double fx = lx - 0.5;
  const double fy = ly - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double wx = fx - x0;
  const double wy = fy - y0;
  Rgbf out;
  auto add = [&](int x, int y, double w) {
    if (w <= 0.0 || x < 0 || x >= color.width() || y < 0 || y >= color.height()) return;
    const Rgb8 c = color(x, y);
    out.r += static_cast<float>(w * c.r);
    out.g += static_cast<float>(w * c.g);
    out.b += static_cast<float>(w * c.b);
  };
  add(x0, y0, (1 - wx) * (1 - wy));
  add(x0 + 1, y0, wx * (1 - wy));
  add(x0, y0 + 1, (1 - wx) * wy);
  add(x0 + 1, y0 + 1, wx * wy);
  return out;
}

PlacedSegment empty_segment(const FrameSize& frame) {
  return PlacedSegment{BoundingBox{0, 0, 0, 0}, MaskGrid{}, ImageRgb8{}, frame};
}

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

AffineTransform2D fit_alignment(const PlacedMask& src, const PlacedMask& dst,
                                const FitOptions& options) {
  const MaskMoments ms = mask_moments(src);
  const MaskMoments md = mask_moments(dst);
  if (ms.area == 0 || md.area == 0) {
    fail(ErrorKind::invalid_input, "fit_alignment requires nonempty masks");
  }

  double sx, sy;
  const bool src_thin_x = src.box.w <= 1 || dst.box.w <= 1;
  const bool src_thin_y = src.box.h <= 1 || dst.box.h <= 1;
  if (src_thin_x && src_thin_y) {
    sx = sy = 1.0;
  } else if (src_thin_x) {
    sy = static_cast<double>(dst.box.h) / src.box.h;
    sx = sy;
  } else if (src_thin_y) {
    sx = static_cast<double>(dst.box.w) / src.box.w;
    sy = sx;
  } else {
    sx = static_cast<double>(dst.box.w) / src.box.w;
    sy = static_cast<double>(dst.box.h) / src.box.h;
  }
  sx = std::clamp(sx, options.scale_min, options.scale_max);
  sy = std::clamp(sy, options.scale_min, options.scale_max);

  double rotation = 0.0;
  if (options.allow_rotation && ms.anisotropy() >= options.min_anisotropy &&
      md.anisotropy() >= options.min_anisotropy) {
    rotation = wrap_half_turn(md.principal_angle() - ms.principal_angle());
  }

  const double cos_r = std::cos(rotation);
  const double sin_r = std::sin(rotation);
  AffineTransform2D t;
  t.a = cos_r * sx;
  t.b = -sin_r * sy;
  t.c = sin_r * sx;
  t.d = cos_r * sy;
  t.tx = md.cx - (t.a * ms.cx + t.b * ms.cy);
  t.ty = md.cy - (t.c * ms.cx + t.d * ms.cy);
  return t;
}

PlacedSegment warp_segment(const PlacedSegment& segment, const AffineTransform2D& t,
                           const FrameSize& frame) {
  if (segment.empty()) return empty_segment(frame);
  const AffineTransform2D inv = t.inverse();

  // Destination support: forward-map the source box corners.
  const double corners_x[4] = {static_cast<double>(segment.box.x0),
                               static_cast<double>(segment.box.x1()),
                               static_cast<double>(segment.box.x0),
                               static_cast<double>(segment.box.x1())};
  const double corners_y[4] = {static_cast<double>(segment.box.y0),
                               static_cast<double>(segment.box.y0),
                               static_cast<double>(segment.box.y1()),
                               static_cast<double>(segment.box.y1())};
  double min_x = 1e30, max_x = -1e30, min_y = 1e30, max_y = -1e30;
  for (int i = 0; i < 4; ++i) {
    const auto [px, py] = t.apply(corners_x[i], corners_y[i]);
    min_x = std::min(min_x, px);
    max_x = std::max(max_x, px);
    min_y = std::min(min_y, py);
    max_y = std::max(max_y, py);
  }
  const BoundingBox support = clip_to_frame(
      BoundingBox{static_cast<int>(std::floor(min_x)), static_cast<int>(std::floor(min_y)),
                  static_cast<int>(std::ceil(max_x)) - static_cast<int>(std::floor(min_x)),
                  static_cast<int>(std::ceil(max_y)) - static_cast<int>(std::floor(min_y))},
      frame);
  if (!support.valid()) return empty_segment(frame);

  MaskGrid mask(support.w, support.h, 0);
  ImageRgb8 color(support.w, support.h);
  int tight_min_x = support.x1(), tight_max_x = support.x0 - 1;
  int tight_min_y = support.y1(), tight_max_y = support.y0 - 1;
  for (int y = 0; y < support.h; ++y) {
    for (int x = 0; x < support.w; ++x) {
      const auto [sx, sy] = inv.apply(support.x0 + x + 0.5, support.y0 + y + 0.5);
      const double lx = sx - segment.box.x0;
      const double ly = sy - segment.box.y0;
      if (bilinear_mask(segment.mask, lx, ly) < 0.5f) continue;
      mask(x, y) = 1;
      const Rgbf c = bilinear_color(segment.color, lx, ly);
      color(x, y) = Rgb8{quantize(c.r), quantize(c.g), quantize(c.b)};
      tight_min_x = std::min(tight_min_x, support.x0 + x);
      tight_max_x = std::max(tight_max_x, support.x0 + x);
      tight_min_y = std::min(tight_min_y, support.y0 + y);
      tight_max_y = std::max(tight_max_y, support.y0 + y);
    }
  }
  if (tight_max_x < tight_min_x) return empty_segment(frame);

  const BoundingBox tight{tight_min_x, tight_min_y, tight_max_x - tight_min_x + 1,
                          tight_max_y - tight_min_y + 1};
  PlacedSegment out{tight, MaskGrid(tight.w, tight.h, 0), ImageRgb8(tight.w, tight.h), frame};
  for (int y = 0; y < tight.h; ++y) {
    for (int x = 0; x < tight.w; ++x) {
      const int gx = tight.x0 + x - support.x0;
      const int gy = tight.y0 + y - support.y0;
      if (mask(gx, gy)) {
        out.mask(x, y) = 1;
        out.color(x, y) = color(gx, gy);
      }
    }
  }
  return out;
}

PlacedSegment perturb_segment(const PlacedSegment& segment, const PerturbationSpec& spec) {
  if (spec.scale_min <= 0.0 || spec.scale_max < spec.scale_min) {
    fail(ErrorKind::invalid_input, "perturbation scale range must be positive");
  }
  if (spec.max_crop_fraction < 0.0 || spec.max_crop_fraction >= 1.0) {
    fail(ErrorKind::invalid_input, "crop fraction must lie in [0, 1)");
  }
  if (segment.empty()) return segment;

  Rng rng(spec.seed);
  const double dx = rng.uniform_range(-spec.max_translation, spec.max_translation);
  const double dy = rng.uniform_range(-spec.max_translation, spec.max_translation);
  const double sx = rng.uniform_range(spec.scale_min, spec.scale_max);
  const double sy = rng.uniform_range(spec.scale_min, spec.scale_max);
  const double rot =
      rng.uniform_range(-spec.max_rotation_deg, spec.max_rotation_deg) * std::numbers::pi / 180.0;
  const double crop_x = rng.uniform_range(0.0, spec.max_crop_fraction);
  const double crop_y = rng.uniform_range(0.0, spec.max_crop_fraction);
  const double crop_left_share = rng.uniform();
  const double crop_top_share = rng.uniform();

  const MaskMoments m = mask_moments(segment.placed_mask());
  const double cos_r = std::cos(rot);
  const double sin_r = std::sin(rot);
  AffineTransform2D t;
  t.a = cos_r * sx;
  t.b = -sin_r * sy;
  t.c = sin_r * sx;
  t.d = cos_r * sy;
  t.tx = m.cx + dx - (t.a * m.cx + t.b * m.cy);
  t.ty = m.cy + dy - (t.c * m.cx + t.d * m.cy);

  PlacedSegment warped = (t == AffineTransform2D::identity())
                             ? segment
                             : warp_segment(segment, t, segment.frame);
  if (warped.empty() || (crop_x <= 0.0 && crop_y <= 0.0)) return warped;

  const int total_crop_x = static_cast<int>(std::floor(crop_x * warped.box.w));
  const int total_crop_y = static_cast<int>(std::floor(crop_y * warped.box.h));
  const int crop_left = static_cast<int>(std::floor(total_crop_x * crop_left_share));
  const int crop_top = static_cast<int>(std::floor(total_crop_y * crop_top_share));
  const BoundingBox keep{warped.box.x0 + crop_left, warped.box.y0 + crop_top,
                         warped.box.w - total_crop_x, warped.box.h - total_crop_y};
  if (!keep.valid()) return empty_segment(segment.frame);

  int min_x = keep.x1(), max_x = keep.x0 - 1, min_y = keep.y1(), max_y = keep.y0 - 1;
  for (int y = keep.y0; y < keep.y1(); ++y) {
    for (int x = keep.x0; x < keep.x1(); ++x) {
      if (warped.mask(x - warped.box.x0, y - warped.box.y0)) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
      }
    }
  }
  if (max_x < min_x) return empty_segment(segment.frame);

  const BoundingBox tight{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
  PlacedSegment out{tight, MaskGrid(tight.w, tight.h, 0), ImageRgb8(tight.w, tight.h),
                    segment.frame};
  for (int y = 0; y < tight.h; ++y) {
    for (int x = 0; x < tight.w; ++x) {
      const int wx = tight.x0 + x - warped.box.x0;
      const int wy = tight.y0 + y - warped.box.y0;
      if (warped.mask(wx, wy)) {
        out.mask(x, y) = 1;
        out.color(x, y) = warped.color(wx, wy);
      }
    }
  }
  return out;
}

}  // namespace collage
