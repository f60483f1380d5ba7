#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "collage/layout.hpp"
#include "collage/segment.hpp"

namespace collage {

enum class Connectivity { four = 4, eight = 8 };

struct ExtractOptions {
  std::int64_t min_area = 16;  // components below this are dropped; 0 disables
  Connectivity connectivity = Connectivity::four;
};

/// Maximal same-class connected components of a layout. Unlabeled pixels
/// belong to no region; regions are numbered in row-major discovery order.
struct RegionMap {
  static constexpr std::int32_t kNone = -1;

  struct Info {
    int class_index = -1;
    BoundingBox bbox;
    std::int64_t area = 0;
  };

  Grid<std::int32_t> region_of;  // region index or kNone
  std::vector<Info> regions;
};

RegionMap connected_regions(const SemanticLayout& layout,
                            Connectivity connectivity = Connectivity::four);

/// Cut one SegmentRecord per connected component with area >= min_area.
/// Record ids are left unassigned (-1); build_bank numbers them.
std::vector<SegmentRecord> extract_segments(const ImageRgb8& image, const SemanticLayout& layout,
                                            std::int64_t source_id,
                                            const ExtractOptions& options = {});

/// Decompose a layout into retrieval queries (same geometry as extraction,
/// no color). region_id is the row-major discovery index.
std::vector<Query> layout_queries(const SemanticLayout& layout,
                                  const ExtractOptions& options = {});

struct TrainingPair {
  std::string name;  // file stem, used for exports
  ImageRgb8 image;
  SemanticLayout layout;
  std::int64_t source_id = -1;
};

/// Class-partitioned, immutable-after-build collection of segments.
class MemoryBank {
 public:
  MemoryBank() = default;
  explicit MemoryBank(std::vector<std::string> classes);

  const std::vector<std::string>& classes() const { return classes_; }
  int class_count() const { return static_cast<int>(classes_.size()); }

  const std::vector<SegmentRecord>& segments() const { return segments_; }
  const SegmentRecord& segment(std::int64_t id) const;
  std::size_t size() const { return segments_.size(); }

  /// Segment ids of one class, ascending.
  std::span<const std::int64_t> of_class(int class_index) const;
  std::vector<std::int64_t> class_counts() const;

  /// Labeled pixels in a segment's context map (cached for retrieval bounds).
  std::int64_t context_labeled(std::int64_t id) const;

  /// Appends a record; its id must equal the current size (densely numbered).
  void add(SegmentRecord record);

 private:
  std::vector<std::string> classes_;
  std::vector<SegmentRecord> segments_;
  std::vector<std::vector<std::int64_t>> per_class_;
  std::vector<std::int64_t> context_labeled_;
};

/// Extract every dataset pair (in parallel when jobs > 1) and assemble the
/// bank with deterministic ids: pairs ordered by source_id, scan order within
/// a pair. All layouts must share one class table.
MemoryBank build_bank(std::span<const TrainingPair> dataset, const ExtractOptions& options = {},
                      int jobs = 1);

void save_bank(const MemoryBank& bank, const std::filesystem::path& dir);
MemoryBank load_bank(const std::filesystem::path& dir);

}  // namespace collage
