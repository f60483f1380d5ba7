#pragma once

#include <cstdint>
#include <optional>

namespace collage {

struct FrameSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const FrameSize&, const FrameSize&) = default;
};

/// Axis-aligned pixel rectangle; (x0, y0) is the top-left corner, extents in
/// pixels, right/bottom edges exclusive.
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  int x1() const { return x0 + w; }
  int y1() const { return y0 + h; }
  std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
  bool valid() const { return w >= 1 && h >= 1; }

  bool contains(const BoundingBox& other) const {
    return other.x0 >= x0 && other.y0 >= y0 && other.x1() <= x1() && other.y1() <= y1();
  }
  bool contains_point(int x, int y) const {
    return x >= x0 && x < x1() && y >= y0 && y < y1();
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b);
BoundingBox bounding_union(const BoundingBox& a, const BoundingBox& b);

/// Shrink `box` to the frame rectangle. Boxes entirely outside come back with
/// zero extent.
BoundingBox clip_to_frame(const BoundingBox& box, const FrameSize& frame);

/// Expand `box` around its neighborhood by `margin` pixels on every side,
/// clipped to the frame.
BoundingBox dilate_box(const BoundingBox& box, int margin, const FrameSize& frame);

/// Context window of a segment: extents grown 25% per dimension (ceil),
/// re-centered on the box center with floored offsets, then clipped to the
/// frame. Always contains `bbox`.
BoundingBox context_box(const BoundingBox& bbox, const FrameSize& frame);

}  // namespace collage
