#pragma once

#include <cstdint>
#include <optional>

#include "collage/bank.hpp"
#include "collage/segment.hpp"

namespace collage {

struct ScoredMatch {
  std::int64_t segment_id = -1;
  double mask_iou = 0.0;
  double context_iou = 0.0;
  double score = 0.0;  // mask_iou + context_iou, in [0, 2]
};

/// Footprint overlap of two placed masks: |a ∩ b| / |a ∪ b|, 0 on an empty
/// union. When frame sizes differ, b is first rescaled to a's frame
/// (nearest-neighbor, pixel-center rule).
double mask_iou(const PlacedMask& a, const PlacedMask& b);

/// Agreement of two placed label grids compared as (pixel, class) indicator
/// sets over the common frame. Pixels outside each box, and unlabeled pixels,
/// contribute no set entries. Same rescale rule as mask_iou.
double context_iou(const PlacedLabels& a, const PlacedLabels& b);

/// Nearest-neighbor rescale of placed geometry between frame sizes. Each
/// target pixel (x, y) samples the source at
/// (floor((x + 0.5) * src_w / dst_w), floor((y + 0.5) * src_h / dst_h)).
PlacedMask rescale_mask(const PlacedMask& mask, const FrameSize& target);
PlacedLabels rescale_labels(const PlacedLabels& labels, const FrameSize& target);

struct RetrieveOptions {
  std::optional<std::int64_t> exclude_source;
};

/// Best same-class candidate by mask IoU + context IoU, lowest id on ties.
/// Uses a bound-and-prune scan that is exact: it returns the same result as
/// scoring every candidate. nullopt when the class has no (non-excluded)
/// candidates.
std::optional<ScoredMatch> retrieve(const Query& query, const MemoryBank& bank,
                                    const RetrieveOptions& options = {});

/// Uniform random choice among the k highest-scoring candidates (fewer if
/// the class is smaller). k = 1 degenerates to retrieve. Deterministic for a
/// fixed seed.
std::optional<ScoredMatch> retrieve_topk(const Query& query, const MemoryBank& bank, int k,
                                         std::uint64_t rng_seed,
                                         const RetrieveOptions& options = {});

}  // namespace collage
