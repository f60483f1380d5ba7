#include "collage/bank.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "collage/error.hpp"
#include "collage/parallel.hpp"
#include "collage/png_io.hpp"

namespace collage {
namespace {

constexpr int kBankFormatVersion = 1;

LabelGrid crop_labels(const LabelGrid& labels, const BoundingBox& box) {
  LabelGrid out(box.w, box.h);
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) {
      out(x, y) = labels(box.x0 + x, box.y0 + y);
    }
  }
  return out;
}

}  // namespace

RegionMap connected_regions(const SemanticLayout& layout, Connectivity connectivity) {
  layout.validate();
  const int w = layout.width();
  const int h = layout.height();

  RegionMap map;
  map.region_of = Grid<std::int32_t>(w, h, RegionMap::kNone);

  static constexpr int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int neighbor_count = connectivity == Connectivity::four ? 4 : 8;

  std::vector<std::pair<int, int>> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::uint8_t cls = layout.labels(sx, sy);
      if (cls == SemanticLayout::kUnlabeled || map.region_of(sx, sy) != RegionMap::kNone) {
        continue;
      }
      const auto region = static_cast<std::int32_t>(map.regions.size());
      RegionMap::Info info;
      info.class_index = cls;
      int min_x = sx, max_x = sx, min_y = sy, max_y = sy;

      stack.clear();
      stack.emplace_back(sx, sy);
      map.region_of(sx, sy) = region;
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        ++info.area;
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        for (int n = 0; n < neighbor_count; ++n) {
          const int nx = x + dx8[n];
          const int ny = y + dy8[n];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          if (layout.labels(nx, ny) != cls) continue;
          if (map.region_of(nx, ny) != RegionMap::kNone) continue;
          map.region_of(nx, ny) = region;
          stack.emplace_back(nx, ny);
        }
      }
      info.bbox = BoundingBox{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
      map.regions.push_back(info);
    }
  }
  return map;
}

std::vector<SegmentRecord> extract_segments(const ImageRgb8& image, const SemanticLayout& layout,
                                            std::int64_t source_id,
                                            const ExtractOptions& options) {
  if (image.width() != layout.width() || image.height() != layout.height()) {
    fail(ErrorKind::invalid_input, "image and layout dimensions differ");
  }
  const RegionMap map = connected_regions(layout, options.connectivity);
  const FrameSize frame = layout.frame();

  std::vector<SegmentRecord> records;
  for (std::size_t r = 0; r < map.regions.size(); ++r) {
    const auto& info = map.regions[r];
    if (options.min_area > 0 && info.area < options.min_area) continue;

    SegmentRecord record;
    record.class_index = info.class_index;
    record.source_id = source_id;
    record.bbox = info.bbox;
    record.area = info.area;
    record.frame = frame;
    record.mask = MaskGrid(info.bbox.w, info.bbox.h, 0);
    record.color = ImageRgb8(info.bbox.w, info.bbox.h);
    for (int y = 0; y < info.bbox.h; ++y) {
      for (int x = 0; x < info.bbox.w; ++x) {
        if (map.region_of(info.bbox.x0 + x, info.bbox.y0 + y) == static_cast<std::int32_t>(r)) {
          record.mask(x, y) = 1;
          record.color(x, y) = image(info.bbox.x0 + x, info.bbox.y0 + y);
        }
      }
    }
    record.context_box = context_box(info.bbox, frame);
    record.context = crop_labels(layout.labels, record.context_box);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<Query> layout_queries(const SemanticLayout& layout, const ExtractOptions& options) {
  const RegionMap map = connected_regions(layout, options.connectivity);
  const FrameSize frame = layout.frame();

  std::vector<Query> queries;
  for (std::size_t r = 0; r < map.regions.size(); ++r) {
    const auto& info = map.regions[r];
    if (options.min_area > 0 && info.area < options.min_area) continue;

    Query query;
    query.region_id = static_cast<int>(r);
    query.class_index = info.class_index;
    query.bbox = info.bbox;
    query.area = info.area;
    query.frame = frame;
    query.mask = MaskGrid(info.bbox.w, info.bbox.h, 0);
    for (int y = 0; y < info.bbox.h; ++y) {
      for (int x = 0; x < info.bbox.w; ++x) {
        if (map.region_of(info.bbox.x0 + x, info.bbox.y0 + y) == static_cast<std::int32_t>(r)) {
          query.mask(x, y) = 1;
        }
      }
    }
    query.context_box = context_box(info.bbox, frame);
    query.context = crop_labels(layout.labels, query.context_box);
    queries.push_back(std::move(query));
  }
  return queries;
}

MemoryBank::MemoryBank(std::vector<std::string> classes) : classes_(std::move(classes)) {
  per_class_.resize(classes_.size());
}

const SegmentRecord& MemoryBank::segment(std::int64_t id) const {
  if (id < 0 || id >= static_cast<std::int64_t>(segments_.size())) {
    fail(ErrorKind::invalid_input, "unknown segment id " + std::to_string(id));
  }
  return segments_[static_cast<std::size_t>(id)];
}

std::span<const std::int64_t> MemoryBank::of_class(int class_index) const {
  if (class_index < 0 || class_index >= class_count()) return {};
  return per_class_[static_cast<std::size_t>(class_index)];
}

std::vector<std::int64_t> MemoryBank::class_counts() const {
  std::vector<std::int64_t> counts(classes_.size());
  for (std::size_t c = 0; c < per_class_.size(); ++c) {
    counts[c] = static_cast<std::int64_t>(per_class_[c].size());
  }
  return counts;
}

std::int64_t MemoryBank::context_labeled(std::int64_t id) const {
  return context_labeled_[static_cast<std::size_t>(id)];
}

void MemoryBank::add(SegmentRecord record) {
  if (record.id != static_cast<std::int64_t>(segments_.size())) {
    fail(ErrorKind::invalid_input, "segment ids must be dense and ascending");
  }
  if (record.class_index < 0 || record.class_index >= class_count()) {
    fail(ErrorKind::invalid_input, "segment class outside the bank class table");
  }
  std::int64_t labeled = 0;
  for (auto v : record.context) {
    if (v != SemanticLayout::kUnlabeled) ++labeled;
  }
  context_labeled_.push_back(labeled);
  per_class_[static_cast<std::size_t>(record.class_index)].push_back(record.id);
  segments_.push_back(std::move(record));
}

MemoryBank build_bank(std::span<const TrainingPair> dataset, const ExtractOptions& options,
                      int jobs) {
  if (dataset.empty()) return MemoryBank{};

  for (const auto& pair : dataset) {
    if (pair.layout.classes != dataset.front().layout.classes) {
      fail(ErrorKind::invalid_input,
           "training pair '" + pair.name + "' uses a different class table");
    }
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset[a].source_id < dataset[b].source_id;
  });

  std::vector<std::vector<SegmentRecord>> per_pair(dataset.size());
  parallel_for(static_cast<std::int64_t>(dataset.size()), jobs, [&](std::int64_t i) {
    const auto& pair = dataset[order[static_cast<std::size_t>(i)]];
    per_pair[static_cast<std::size_t>(i)] =
        extract_segments(pair.image, pair.layout, pair.source_id, options);
  });

  MemoryBank bank(dataset.front().layout.classes);
  std::int64_t next_id = 0;
  for (auto& records : per_pair) {
    for (auto& record : records) {
      record.id = next_id++;
      bank.add(std::move(record));
    }
  }
  return bank;
}

namespace {

nlohmann::json box_to_json(const BoundingBox& box) {
  return nlohmann::json{{"x0", box.x0}, {"y0", box.y0}, {"w", box.w}, {"h", box.h}};
}

BoundingBox box_from_json(const nlohmann::json& j) {
  return BoundingBox{j.at("x0").get<int>(), j.at("y0").get<int>(), j.at("w").get<int>(),
                     j.at("h").get<int>()};
}

std::string segment_stem(std::int64_t id) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%06lld", static_cast<long long>(id));
  return buffer;
}

}  // namespace

void save_bank(const MemoryBank& bank, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "segments");

  nlohmann::json manifest;
  manifest["format"] = "collage-bank";
  manifest["version"] = kBankFormatVersion;
  manifest["classes"] = bank.classes();
  manifest["counts"] = bank.class_counts();

  nlohmann::json entries = nlohmann::json::array();
  for (const auto& record : bank.segments()) {
    const std::string stem = segment_stem(record.id);
    const auto color_file = "segments/" + stem + "_color.png";
    const auto mask_file = "segments/" + stem + "_mask.png";
    const auto context_file = "segments/" + stem + "_context.png";

    Grid<std::uint8_t> mask_img(record.mask.width(), record.mask.height());
    auto out = mask_img.begin();
    for (auto v : record.mask) *out++ = v ? 255 : 0;

    png::write_rgb8(dir / color_file, record.color);
    png::write_gray8(dir / mask_file, mask_img);
    png::write_gray8(dir / context_file, record.context);

    nlohmann::json entry;
    entry["id"] = record.id;
    entry["class"] = record.class_index;
    entry["source"] = record.source_id;
    entry["bbox"] = box_to_json(record.bbox);
    entry["context_box"] = box_to_json(record.context_box);
    entry["frame"] = {{"width", record.frame.width}, {"height", record.frame.height}};
    entry["area"] = record.area;
    entry["files"] = {{"color", color_file}, {"mask", mask_file}, {"context", context_file}};
    entry["crc32"] = {{"color", png::file_crc32(dir / color_file)},
                      {"mask", png::file_crc32(dir / mask_file)},
                      {"context", png::file_crc32(dir / context_file)}};
    entries.push_back(std::move(entry));
  }
  manifest["segments"] = std::move(entries);

  std::ofstream out(dir / "manifest.json");
  if (!out) fail(ErrorKind::io, "cannot write bank manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

MemoryBank load_bank(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorKind::io, "cannot open bank manifest '" + manifest_path.string() + "'");

  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::corrupt_bank,
         "corrupt bank manifest '" + manifest_path.string() + "': " + e.what());
  }

  if (manifest.value("format", "") != "collage-bank") {
    fail(ErrorKind::corrupt_bank, "'" + manifest_path.string() + "' is not a bank manifest");
  }
  const int version = manifest.value("version", -1);
  if (version != kBankFormatVersion) {
    fail(ErrorKind::version_mismatch,
         "bank format version " + std::to_string(version) + " unsupported (expected " +
             std::to_string(kBankFormatVersion) + ")");
  }

  try {
    MemoryBank bank(manifest.at("classes").get<std::vector<std::string>>());
    for (const auto& entry : manifest.at("segments")) {
      SegmentRecord record;
      record.id = entry.at("id").get<std::int64_t>();
      record.class_index = entry.at("class").get<int>();
      record.source_id = entry.at("source").get<std::int64_t>();
      record.bbox = box_from_json(entry.at("bbox"));
      record.context_box = box_from_json(entry.at("context_box"));
      record.frame = {entry.at("frame").at("width").get<int>(),
                      entry.at("frame").at("height").get<int>()};
      record.area = entry.at("area").get<std::int64_t>();

      const auto& files = entry.at("files");
      for (const char* key : {"color", "mask", "context"}) {
        const auto path = dir / files.at(key).get<std::string>();
        if (!std::filesystem::exists(path)) {
          fail(ErrorKind::missing_asset, "segment " + std::to_string(record.id) +
                                             ": missing asset '" + path.string() + "'");
        }
        const auto expected = entry.at("crc32").at(key).get<std::uint32_t>();
        const auto actual = png::file_crc32(path);
        if (actual != expected) {
          fail(ErrorKind::corrupt_bank, "segment " + std::to_string(record.id) +
                                            ": checksum mismatch on '" + path.string() + "'");
        }
      }

      record.color = png::read_rgb8(dir / files.at("color").get<std::string>());
      auto mask_img = png::read_gray8(dir / files.at("mask").get<std::string>());
      record.mask = MaskGrid(mask_img.width(), mask_img.height());
      auto out = record.mask.begin();
      for (auto v : mask_img) *out++ = v ? 1 : 0;
      record.context = png::read_gray8(dir / files.at("context").get<std::string>());

      bank.add(std::move(record));
    }
    return bank;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::corrupt_bank,
         "corrupt bank manifest '" + manifest_path.string() + "': " + e.what());
  }
}

}  // namespace collage
