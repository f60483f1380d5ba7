#include "collage/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "collage/error.hpp"
#include "collage/rng.hpp"

namespace collage {
namespace {

// Non-owning placements, so candidate scoring never copies grids.
struct MaskRef {
  const BoundingBox& box;
  const MaskGrid& mask;
  FrameSize frame;
};

struct LabelsRef {
  const BoundingBox& box;
  const LabelGrid& labels;
  FrameSize frame;
};

std::int64_t count_set(const MaskGrid& mask) {
  std::int64_t n = 0;
  for (auto v : mask) n += v ? 1 : 0;
  return n;
}

std::int64_t count_labeled(const LabelGrid& labels) {
  std::int64_t n = 0;
  for (auto v : labels) n += v != SemanticLayout::kUnlabeled ? 1 : 0;
  return n;
}

std::int64_t mask_intersection(const MaskRef& a, const MaskRef& b) {
  const auto overlap = intersect(a.box, b.box);
  if (!overlap) return 0;
  std::int64_t n = 0;
  for (int y = overlap->y0; y < overlap->y1(); ++y) {
    for (int x = overlap->x0; x < overlap->x1(); ++x) {
      if (a.mask(x - a.box.x0, y - a.box.y0) && b.mask(x - b.box.x0, y - b.box.y0)) ++n;
    }
  }
  return n;
}

std::int64_t label_intersection(const LabelsRef& a, const LabelsRef& b) {
  const auto overlap = intersect(a.box, b.box);
  if (!overlap) return 0;
  std::int64_t n = 0;
  for (int y = overlap->y0; y < overlap->y1(); ++y) {
    for (int x = overlap->x0; x < overlap->x1(); ++x) {
      const auto la = a.labels(x - a.box.x0, y - a.box.y0);
      if (la != SemanticLayout::kUnlabeled && la == b.labels(x - b.box.x0, y - b.box.y0)) ++n;
    }
  }
  return n;
}

double ratio(std::int64_t intersection, std::int64_t union_size) {
  return union_size == 0 ? 0.0
                         : static_cast<double>(intersection) / static_cast<double>(union_size);
}

double iou_same_frame(const MaskRef& a, std::int64_t area_a, const MaskRef& b,
                      std::int64_t area_b) {
  const std::int64_t inter = mask_intersection(a, b);
  return ratio(inter, area_a + area_b - inter);
}

double context_iou_same_frame(const LabelsRef& a, std::int64_t labeled_a, const LabelsRef& b,
                              std::int64_t labeled_b) {
  const std::int64_t inter = label_intersection(a, b);
  return ratio(inter, labeled_a + labeled_b - inter);
}

int source_index(int target_coord, int source_extent, int target_extent) {
  const double s = (target_coord + 0.5) * static_cast<double>(source_extent) / target_extent;
  return std::min(source_extent - 1, static_cast<int>(std::floor(s)));
}

/// Conservative image of `box` under the frame rescale: a superset of every
/// pixel the nearest-neighbor resample can produce.
BoundingBox rescale_box_outer(const BoundingBox& box, const FrameSize& source,
                              const FrameSize& target) {
  const auto lo = [](std::int64_t v, int t, int s) {
    return static_cast<int>(v * t / s);  // floor for non-negative v
  };
  const auto hi = [](std::int64_t v, int t, int s) { return static_cast<int>((v * t + s - 1) / s); };
  const int x0 = lo(box.x0, target.width, source.width);
  const int y0 = lo(box.y0, target.height, source.height);
  const int x1 = hi(box.x1(), target.width, source.width);
  const int y1 = hi(box.y1(), target.height, source.height);
  return clip_to_frame(BoundingBox{x0, y0, x1 - x0, y1 - y0}, target);
}

struct ScoreParts {
  double mask_iou = 0.0;
  double context_iou = 0.0;
  double total() const { return mask_iou + context_iou; }
};

/// Exact score of one bank candidate against the query, rescaling the
/// candidate's geometry into the query frame when sizes differ.
ScoreParts score_candidate(const Query& query, std::int64_t query_labeled,
                           const SegmentRecord& record, std::int64_t record_labeled) {
  const MaskRef query_mask{query.bbox, query.mask, query.frame};
  const LabelsRef query_ctx{query.context_box, query.context, query.frame};

  if (record.frame == query.frame) {
    ScoreParts parts;
    parts.mask_iou = iou_same_frame(query_mask, query.area,
                                    MaskRef{record.bbox, record.mask, record.frame}, record.area);
    parts.context_iou = context_iou_same_frame(
        query_ctx, query_labeled, LabelsRef{record.context_box, record.context, record.frame},
        record_labeled);
    return parts;
  }

  const PlacedMask scaled_mask = rescale_mask(record.placed_mask(), query.frame);
  const PlacedLabels scaled_ctx = rescale_labels(record.placed_context(), query.frame);
  ScoreParts parts;
  parts.mask_iou = iou_same_frame(query_mask, query.area,
                                  MaskRef{scaled_mask.box, scaled_mask.mask, scaled_mask.frame},
                                  count_set(scaled_mask.mask));
  parts.context_iou = context_iou_same_frame(
      query_ctx, query_labeled, LabelsRef{scaled_ctx.box, scaled_ctx.labels, scaled_ctx.frame},
      count_labeled(scaled_ctx.labels));
  return parts;
}

std::int64_t overlap_area(const BoundingBox& a, const BoundingBox& b) {
  const auto box = intersect(a, b);
  return box ? box->area() : 0;
}

/// score_candidate(...) <= this bound, from bbox geometry and areas alone.
/// Bounds use IoU <= min(|a|,|b|,bbox overlap) / max(|a|,|b|); with mixed
/// frame sizes the candidate side uses its conservative rescaled bbox.
double score_upper_bound(const Query& query, std::int64_t query_labeled,
                         const SegmentRecord& record, std::int64_t record_labeled) {
  const bool same_frame = record.frame == query.frame;
  BoundingBox cand_bbox = record.bbox;
  BoundingBox cand_ctx = record.context_box;
  std::int64_t cand_area = record.area;
  std::int64_t cand_labeled = record_labeled;
  if (!same_frame) {
    cand_bbox = rescale_box_outer(record.bbox, record.frame, query.frame);
    cand_ctx = rescale_box_outer(record.context_box, record.frame, query.frame);
    cand_area = cand_bbox.area();  // true rescaled mask area is unknown but smaller
    cand_labeled = cand_ctx.area();
  }
  const std::int64_t mask_inter_ub =
      std::min({query.area, cand_area, overlap_area(query.bbox, cand_bbox)});
  const std::int64_t mask_union_lb = same_frame ? std::max(query.area, cand_area) : query.area;
  const std::int64_t ctx_inter_ub =
      std::min({query_labeled, cand_labeled, overlap_area(query.context_box, cand_ctx)});
  const std::int64_t ctx_union_lb =
      same_frame ? std::max(query_labeled, cand_labeled) : query_labeled;
  return ratio(mask_inter_ub, mask_union_lb) + ratio(ctx_inter_ub, ctx_union_lb);
}

// Floating-point slack for prune decisions. Scores and bounds are quotients
// of exact int64 counts, so their rounding error is < 1e-14; pruning only
// when a bound falls this far below the incumbent keeps the scan exact.
constexpr double kPruneMargin = 1e-9;

bool better_match(const ScoredMatch& a, const ScoredMatch& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.segment_id < b.segment_id;
}

struct RankedCandidate {
  double bound;
  std::int64_t id;
};

std::vector<RankedCandidate> ranked_candidates(const Query& query, std::int64_t query_labeled,
                                               const MemoryBank& bank,
                                               const RetrieveOptions& options) {
  if (query.area <= 0) fail(ErrorKind::invalid_input, "query has an empty mask");
  std::vector<RankedCandidate> ranked;
  for (std::int64_t id : bank.of_class(query.class_index)) {
    const auto& record = bank.segment(id);
    if (options.exclude_source && record.source_id == *options.exclude_source) continue;
    ranked.push_back(
        {score_upper_bound(query, query_labeled, record, bank.context_labeled(id)), id});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id < b.id;
  });
  return ranked;
}

}  // namespace

PlacedMask rescale_mask(const PlacedMask& mask, const FrameSize& target) {
  if (mask.frame == target) return mask;
  if (target.width < 1 || target.height < 1) {
    fail(ErrorKind::invalid_input, "rescale target frame is empty");
  }
  const BoundingBox outer = rescale_box_outer(mask.box, mask.frame, target);
  MaskGrid grid(std::max(outer.w, 0), std::max(outer.h, 0), 0);
  int min_x = outer.x1(), max_x = outer.x0 - 1, min_y = outer.y1(), max_y = outer.y0 - 1;
  for (int y = 0; y < outer.h; ++y) {
    const int sy = source_index(outer.y0 + y, mask.frame.height, target.height);
    for (int x = 0; x < outer.w; ++x) {
      const int sx = source_index(outer.x0 + x, mask.frame.width, target.width);
      if (mask.get(sx, sy)) {
        grid(x, y) = 1;
        min_x = std::min(min_x, outer.x0 + x);
        max_x = std::max(max_x, outer.x0 + x);
        min_y = std::min(min_y, outer.y0 + y);
        max_y = std::max(max_y, outer.y0 + y);
      }
    }
  }
  if (max_x < min_x) {
    return PlacedMask{BoundingBox{0, 0, 0, 0}, MaskGrid{}, target};
  }
  const BoundingBox tight{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
  MaskGrid tight_grid(tight.w, tight.h, 0);
  for (int y = 0; y < tight.h; ++y) {
    for (int x = 0; x < tight.w; ++x) {
      tight_grid(x, y) = grid(tight.x0 + x - outer.x0, tight.y0 + y - outer.y0);
    }
  }
  return PlacedMask{tight, std::move(tight_grid), target};
}

PlacedLabels rescale_labels(const PlacedLabels& labels, const FrameSize& target) {
  if (labels.frame == target) return labels;
  if (target.width < 1 || target.height < 1) {
    fail(ErrorKind::invalid_input, "rescale target frame is empty");
  }
  const BoundingBox outer = rescale_box_outer(labels.box, labels.frame, target);
  LabelGrid grid(std::max(outer.w, 0), std::max(outer.h, 0), SemanticLayout::kUnlabeled);
  for (int y = 0; y < outer.h; ++y) {
    const int sy = source_index(outer.y0 + y, labels.frame.height, target.height);
    for (int x = 0; x < outer.w; ++x) {
      const int sx = source_index(outer.x0 + x, labels.frame.width, target.width);
      if (labels.box.contains_point(sx, sy)) {
        grid(x, y) = labels.labels(sx - labels.box.x0, sy - labels.box.y0);
      }
    }
  }
  return PlacedLabels{outer, std::move(grid), target};
}

double mask_iou(const PlacedMask& a, const PlacedMask& b) {
  if (!(b.frame == a.frame)) {
    const PlacedMask scaled = rescale_mask(b, a.frame);
    return mask_iou(a, scaled);
  }
  const MaskRef ra{a.box, a.mask, a.frame};
  const MaskRef rb{b.box, b.mask, b.frame};
  return iou_same_frame(ra, count_set(a.mask), rb, count_set(b.mask));
}

double context_iou(const PlacedLabels& a, const PlacedLabels& b) {
  if (!(b.frame == a.frame)) {
    const PlacedLabels scaled = rescale_labels(b, a.frame);
    return context_iou(a, scaled);
  }
  const LabelsRef ra{a.box, a.labels, a.frame};
  const LabelsRef rb{b.box, b.labels, b.frame};
  return context_iou_same_frame(ra, count_labeled(a.labels), rb, count_labeled(b.labels));
}

std::optional<ScoredMatch> retrieve(const Query& query, const MemoryBank& bank,
                                    const RetrieveOptions& options) {
  const std::int64_t query_labeled = count_labeled(query.context);
  const auto ranked = ranked_candidates(query, query_labeled, bank, options);
  if (ranked.empty()) return std::nullopt;

  std::optional<ScoredMatch> best;
  for (const auto& candidate : ranked) {
    if (best && candidate.bound < best->score - kPruneMargin) break;
    const auto& record = bank.segment(candidate.id);
    const ScoreParts parts =
        score_candidate(query, query_labeled, record, bank.context_labeled(candidate.id));
    const ScoredMatch match{candidate.id, parts.mask_iou, parts.context_iou, parts.total()};
    if (!best || better_match(match, *best)) best = match;
  }
  return best;
}

std::optional<ScoredMatch> retrieve_topk(const Query& query, const MemoryBank& bank, int k,
                                         std::uint64_t rng_seed,
                                         const RetrieveOptions& options) {
  if (k < 1) fail(ErrorKind::invalid_input, "k must be >= 1");
  const std::int64_t query_labeled = count_labeled(query.context);
  const auto ranked = ranked_candidates(query, query_labeled, bank, options);
  if (ranked.empty()) return std::nullopt;

  std::vector<ScoredMatch> kept;  // best first, at most k entries
  kept.reserve(static_cast<std::size_t>(k) + 1);
  for (const auto& candidate : ranked) {
    if (kept.size() == static_cast<std::size_t>(k) &&
        candidate.bound < kept.back().score - kPruneMargin) {
      break;
    }
    const auto& record = bank.segment(candidate.id);
    const ScoreParts parts =
        score_candidate(query, query_labeled, record, bank.context_labeled(candidate.id));
    const ScoredMatch match{candidate.id, parts.mask_iou, parts.context_iou, parts.total()};
    auto pos = std::upper_bound(kept.begin(), kept.end(), match, better_match);
    kept.insert(pos, match);
    if (kept.size() > static_cast<std::size_t>(k)) kept.pop_back();
  }

  Rng rng(rng_seed);
  return kept[static_cast<std::size_t>(rng.uniform_index(kept.size()))];
}

}  // namespace collage
