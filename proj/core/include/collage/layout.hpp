#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "collage/geometry.hpp"
#include "collage/grid.hpp"

namespace collage {

/// Named class list plus the sentinel value that marks unlabeled pixels in
/// layout files. Lives in a `classes.json` sidecar next to the rasters.
struct ClassTable {
  std::vector<std::string> classes;
  std::uint8_t unlabeled = 255;

  int index_of(const std::string& name) const;  // -1 if unknown
  void validate() const;
  friend bool operator==(const ClassTable&, const ClassTable&) = default;
};

/// Per-pixel class-index map. Labels hold either a class index below
/// class_count() or kUnlabeled.
struct SemanticLayout {
  static constexpr std::uint8_t kUnlabeled = 255;

  std::vector<std::string> classes;
  LabelGrid labels;

  int width() const { return labels.width(); }
  int height() const { return labels.height(); }
  FrameSize frame() const { return {labels.width(), labels.height()}; }
  int class_count() const { return static_cast<int>(classes.size()); }

  bool label_valid(std::uint8_t label) const {
    return label == kUnlabeled || label < classes.size();
  }
  /// Throws invalid_input on empty frames, empty class tables, or labels
  /// outside [0, c) ∪ {kUnlabeled}.
  void validate() const;

  friend bool operator==(const SemanticLayout&, const SemanticLayout&) = default;
};

ClassTable load_class_table(const std::filesystem::path& json_path);
void save_class_table(const std::filesystem::path& json_path, const ClassTable& table);

/// Reads an indexed raster and normalizes the file's unlabeled sentinel to
/// SemanticLayout::kUnlabeled.
SemanticLayout load_layout(const std::filesystem::path& png_path, const ClassTable& table);
void save_layout(const std::filesystem::path& png_path, const SemanticLayout& layout);

}  // namespace collage
