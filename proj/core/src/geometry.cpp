#include "collage/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace collage {

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) {
  const int x0 = std::max(a.x0, b.x0);
  const int y0 = std::max(a.y0, b.y0);
  const int x1 = std::min(a.x1(), b.x1());
  const int y1 = std::min(a.y1(), b.y1());
  if (x1 <= x0 || y1 <= y0) {
    return std::nullopt;
  }
  return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

BoundingBox bounding_union(const BoundingBox& a, const BoundingBox& b) {
  if (!a.valid()) return b;
  if (!b.valid()) return a;
  const int x0 = std::min(a.x0, b.x0);
  const int y0 = std::min(a.y0, b.y0);
  const int x1 = std::max(a.x1(), b.x1());
  const int y1 = std::max(a.y1(), b.y1());
  return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

BoundingBox clip_to_frame(const BoundingBox& box, const FrameSize& frame) {
  const int x0 = std::clamp(box.x0, 0, frame.width);
  const int y0 = std::clamp(box.y0, 0, frame.height);
  const int x1 = std::clamp(box.x1(), 0, frame.width);
  const int y1 = std::clamp(box.y1(), 0, frame.height);
  return BoundingBox{x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

BoundingBox dilate_box(const BoundingBox& box, int margin, const FrameSize& frame) {
  return clip_to_frame(
      BoundingBox{box.x0 - margin, box.y0 - margin, box.w + 2 * margin, box.h + 2 * margin},
      frame);
}

BoundingBox context_box(const BoundingBox& bbox, const FrameSize& frame) {
  const int new_w = static_cast<int>(std::ceil(1.25 * bbox.w));
  const int new_h = static_cast<int>(std::ceil(1.25 * bbox.h));
  const double cx = bbox.x0 + bbox.w / 2.0;
  const double cy = bbox.y0 + bbox.h / 2.0;
  int x0 = static_cast<int>(std::floor(cx - new_w / 2.0));
  int y0 = static_cast<int>(std::floor(cy - new_h / 2.0));
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  const int w = std::min(new_w, frame.width - x0);
  const int h = std::min(new_h, frame.height - y0);
  return BoundingBox{x0, y0, w, h};
}

}  // namespace collage
