#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "collage/bank.hpp"
#include "collage/layout.hpp"
#include "collage/segment.hpp"

namespace collage {

enum class PixelState : std::uint8_t {
  missing = 0,
  content = 1,
  interior_elided = 2,  // rgb forced to white
  exterior_elided = 3,  // rgb forced to black
};

/// One region's placement on the canvas: which layout region it fills, which
/// bank segment was chosen (if any), and the aligned pixels.
struct PlacedRegion {
  int region_id = -1;
  int class_index = -1;
  std::int64_t segment_id = -1;  // bank id; -1 when the region had no match
  PlacedSegment segment;         // empty when no match
};

struct Canvas {
  static constexpr std::int32_t kNoRegion = -1;

  ImageRgb8 rgb;
  Grid<std::uint8_t> state;       // PixelState values
  Grid<std::int32_t> provenance;  // region_id of the pixel's owner, kNoRegion iff missing
  std::vector<PlacedRegion> regions;
  std::vector<int> paint_order;   // indices into regions, back to front

  int width() const { return rgb.width(); }
  int height() const { return rgb.height(); }
};

struct DepthMap {
  Grid<float> depth;  // valid entries finite and >= 0
  MaskGrid valid;
};

/// Antisymmetric class-pair front/back relation with a strict total-order
/// fallback (listed back to front).
class OrderingTable {
 public:
  OrderingTable() = default;
  explicit OrderingTable(std::vector<int> fallback_back_to_front);

  void add_votes(int class_a, int class_b, std::int64_t a_front, std::int64_t b_front);

  /// Which class paints in front: vote majority, fallback order on ties or
  /// unseen pairs (the class nearer the front of the fallback wins).
  int front_class(int class_a, int class_b) const;
  int fallback_rank(int class_index) const;  // 0 = backmost
  const std::vector<int>& fallback() const { return fallback_; }

  struct PairVotes {
    int class_a = 0, class_b = 0;  // class_a < class_b
    std::int64_t a_front = 0, b_front = 0;
  };
  std::vector<PairVotes> votes() const;

 private:
  std::map<std::pair<int, int>, std::pair<std::int64_t, std::int64_t>> votes_;
  std::vector<int> fallback_;
  std::vector<int> rank_;
};

void save_ordering(const std::filesystem::path& path, const OrderingTable& table,
                   const std::vector<std::string>& classes);
OrderingTable load_ordering(const std::filesystem::path& path,
                            const std::vector<std::string>& classes);

struct DepthPair {
  SemanticLayout layout;
  DepthMap depth;
};

/// Vote-based class ordering from training depth: for every pair of adjacent
/// segments (masks within 2 px, Chebyshev), the one with smaller mean valid
/// depth votes "front" for its class. Majority decides each pair; ties and
/// unseen pairs defer to `fallback` (or, when absent, to classes sorted by
/// global mean depth, far to near). With no depth votes at all a fallback is
/// required.
OrderingTable derive_ordering(std::span<const DepthPair> pairs, int class_count,
                              std::optional<std::vector<int>> fallback = std::nullopt,
                              const ExtractOptions& options = {}, int jobs = 1);

/// Paint placements back-to-front. The paint order is a topological sort of
/// the front/back relation restricted to pairs whose masks overlap; cycles
/// and same-class overlaps break deterministically (fallback rank, then
/// region id). Pixels no segment covers stay missing.
Canvas compose(const SemanticLayout& layout, std::vector<PlacedRegion> placements,
               const OrderingTable& ordering);

struct ElideOptions {
  double band = 0.05;          // band half-width as a fraction of canvas height
  double interior_rate = 0.8;  // per-pixel elision probability inside the band
  std::uint64_t seed = 0;
  std::vector<int> exterior_exclude_classes;  // no exterior band around these
};

/// Boundary elision over a composed canvas. Band threshold is
/// floor(band * h) px of exact Euclidean distance to each painted segment's
/// own mask boundary. Interior band pixels (still owned by their segment) go
/// white with probability interior_rate; exterior band pixels go black unless
/// they are content of a segment painted in front. Deterministic per seed.
void elide_boundaries(Canvas& canvas, const ElideOptions& options = {});

}  // namespace collage
