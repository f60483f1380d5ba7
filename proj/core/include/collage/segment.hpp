#pragma once

#include <cstdint>

#include "collage/geometry.hpp"
#include "collage/grid.hpp"

namespace collage {

/// Binary mask cropped to `box`, positioned in a frame of size `frame`.
struct PlacedMask {
  BoundingBox box;
  MaskGrid mask;  // box.w x box.h
  FrameSize frame;

  bool get(int frame_x, int frame_y) const {
    return box.contains_point(frame_x, frame_y) &&
           mask(frame_x - box.x0, frame_y - box.y0) != 0;
  }
};

/// Class-index labels over `box` (kUnlabeled allowed), positioned in a frame.
struct PlacedLabels {
  BoundingBox box;
  LabelGrid labels;
  FrameSize frame;
};

/// Color patch plus mask positioned in a frame; color is zero off-mask.
struct PlacedSegment {
  BoundingBox box;
  MaskGrid mask;
  ImageRgb8 color;
  FrameSize frame;

  bool empty() const;
  std::int64_t mask_area() const;
  PlacedMask placed_mask() const { return {box, mask, frame}; }
};

/// One memory-bank entry: a connected component cut from a training pair,
/// stored bbox-cropped with enough placement data to reconstruct its
/// full-frame footprint.
struct SegmentRecord {
  std::int64_t id = -1;
  int class_index = -1;
  std::int64_t source_id = -1;
  BoundingBox bbox;         // tight extent of mask, frame coordinates
  ImageRgb8 color;          // over bbox, zeroed off-mask
  MaskGrid mask;            // over bbox
  std::int64_t area = 0;    // set pixels in mask
  BoundingBox context_box;  // bbox enlarged 25% per dimension, clipped
  LabelGrid context;        // class indices over context_box
  FrameSize frame;          // source frame size

  PlacedMask placed_mask() const { return {bbox, mask, frame}; }
  PlacedLabels placed_context() const { return {context_box, context, frame}; }
  PlacedSegment placed_segment() const { return {bbox, mask, color, frame}; }
};

/// A connected region of a query layout, shaped like a bank record so the
/// same scoring runs on both sides.
struct Query {
  int region_id = -1;
  int class_index = -1;
  BoundingBox bbox;
  MaskGrid mask;
  std::int64_t area = 0;
  BoundingBox context_box;
  LabelGrid context;
  FrameSize frame;

  PlacedMask placed_mask() const { return {bbox, mask, frame}; }
  PlacedLabels placed_context() const { return {context_box, context, frame}; }
};

}  // namespace collage
