#include "collage/segment.hpp"

namespace collage {

bool PlacedSegment::empty() const { return mask_area() == 0; }

std::int64_t PlacedSegment::mask_area() const {
  std::int64_t n = 0;
  for (auto v : mask) n += v ? 1 : 0;
  return n;
}

}  // namespace collage
