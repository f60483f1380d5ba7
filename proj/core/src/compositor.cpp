#include "collage/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>

#include <json.hpp>

#include "collage/distance.hpp"
#include "collage/error.hpp"
#include "collage/parallel.hpp"
#include "collage/rng.hpp"

namespace collage {

OrderingTable::OrderingTable(std::vector<int> fallback_back_to_front)
    : fallback_(std::move(fallback_back_to_front)) {
  if (fallback_.empty()) fail(ErrorKind::invalid_input, "fallback order is empty");
  int max_class = 0;
  for (int c : fallback_) max_class = std::max(max_class, c);
  rank_.assign(static_cast<std::size_t>(max_class) + 1, -1);
  for (std::size_t i = 0; i < fallback_.size(); ++i) {
    const int c = fallback_[i];
    if (c < 0 || rank_[static_cast<std::size_t>(c)] != -1) {
      fail(ErrorKind::invalid_input, "fallback order is not a strict total order");
    }
    rank_[static_cast<std::size_t>(c)] = static_cast<int>(i);
  }
}

void OrderingTable::add_votes(int class_a, int class_b, std::int64_t a_front,
                              std::int64_t b_front) {
  if (class_a == class_b) fail(ErrorKind::invalid_input, "votes need two distinct classes");
  if (class_a > class_b) {
    std::swap(class_a, class_b);
    std::swap(a_front, b_front);
  }
  auto& entry = votes_[{class_a, class_b}];
  entry.first += a_front;
  entry.second += b_front;
}

int OrderingTable::fallback_rank(int class_index) const {
  if (class_index < 0 || class_index >= static_cast<int>(rank_.size()) ||
      rank_[static_cast<std::size_t>(class_index)] < 0) {
    fail(ErrorKind::invalid_input,
         "class " + std::to_string(class_index) + " missing from the fallback order");
  }
  return rank_[static_cast<std::size_t>(class_index)];
}

int OrderingTable::front_class(int class_a, int class_b) const {
  if (class_a == class_b) return class_a;
  int lo = class_a, hi = class_b;
  if (lo > hi) std::swap(lo, hi);
  if (const auto it = votes_.find({lo, hi}); it != votes_.end()) {
    const auto [lo_front, hi_front] = it->second;
    if (lo_front > hi_front) return lo;
    if (hi_front > lo_front) return hi;
  }
  return fallback_rank(class_a) > fallback_rank(class_b) ? class_a : class_b;
}

std::vector<OrderingTable::PairVotes> OrderingTable::votes() const {
  std::vector<PairVotes> out;
  out.reserve(votes_.size());
  for (const auto& [key, value] : votes_) {
    out.push_back({key.first, key.second, value.first, value.second});
  }
  return out;
}

void save_ordering(const std::filesystem::path& path, const OrderingTable& table,
                   const std::vector<std::string>& classes) {
  nlohmann::json doc;
  doc["format"] = "collage-ordering";
  doc["classes"] = classes;
  nlohmann::json fallback = nlohmann::json::array();
  for (int c : table.fallback()) fallback.push_back(classes.at(static_cast<std::size_t>(c)));
  doc["fallback_back_to_front"] = std::move(fallback);
  nlohmann::json votes = nlohmann::json::array();
  for (const auto& pair : table.votes()) {
    votes.push_back({{"class_a", classes.at(static_cast<std::size_t>(pair.class_a))},
                     {"class_b", classes.at(static_cast<std::size_t>(pair.class_b))},
                     {"a_front", pair.a_front},
                     {"b_front", pair.b_front}});
  }
  doc["votes"] = std::move(votes);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write ordering '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

OrderingTable load_ordering(const std::filesystem::path& path,
                            const std::vector<std::string>& classes) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open ordering '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, "malformed ordering '" + path.string() + "': " + e.what());
  }
  try {
    if (doc.value("format", "") != "collage-ordering") {
      fail(ErrorKind::io, "'" + path.string() + "' is not an ordering file");
    }
    auto class_index = [&](const std::string& name) {
      const auto it = std::find(classes.begin(), classes.end(), name);
      if (it == classes.end()) {
        fail(ErrorKind::invalid_input,
             "ordering file names unknown class '" + name + "'");
      }
      return static_cast<int>(it - classes.begin());
    };
    std::vector<int> fallback;
    for (const auto& name : doc.at("fallback_back_to_front")) {
      fallback.push_back(class_index(name.get<std::string>()));
    }
    OrderingTable table(std::move(fallback));
    for (const auto& vote : doc.at("votes")) {
      table.add_votes(class_index(vote.at("class_a").get<std::string>()),
                      class_index(vote.at("class_b").get<std::string>()),
                      vote.at("a_front").get<std::int64_t>(),
                      vote.at("b_front").get<std::int64_t>());
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, "malformed ordering '" + path.string() + "': " + e.what());
  }
}

namespace {

struct ImageVotes {
  // (class_a, class_b) with class_a < class_b -> (a_front, b_front)
  std::map<std::pair<int, int>, std::pair<std::int64_t, std::int64_t>> votes;
  std::vector<double> class_depth_sum;
  std::vector<std::int64_t> class_depth_count;
};

ImageVotes vote_one_pair(const DepthPair& pair, int class_count,
                         const ExtractOptions& options) {
  ImageVotes result;
  result.class_depth_sum.assign(static_cast<std::size_t>(class_count), 0.0);
  result.class_depth_count.assign(static_cast<std::size_t>(class_count), 0);

  const auto& layout = pair.layout;
  const auto& depth = pair.depth;
  if (depth.depth.width() != layout.width() || depth.depth.height() != layout.height()) {
    fail(ErrorKind::invalid_input, "depth map and layout dimensions differ");
  }

  const RegionMap map = connected_regions(layout, options.connectivity);
  const int region_count = static_cast<int>(map.regions.size());

  // Mean valid depth per region.
  std::vector<double> depth_sum(static_cast<std::size_t>(region_count), 0.0);
  std::vector<std::int64_t> depth_count(static_cast<std::size_t>(region_count), 0);
  for (int y = 0; y < layout.height(); ++y) {
    for (int x = 0; x < layout.width(); ++x) {
      const std::int32_t region = map.region_of(x, y);
      if (region == RegionMap::kNone || !depth.valid(x, y)) continue;
      depth_sum[static_cast<std::size_t>(region)] += depth.depth(x, y);
      ++depth_count[static_cast<std::size_t>(region)];
    }
  }
  std::vector<double> mean_depth(static_cast<std::size_t>(region_count));
  for (int r = 0; r < region_count; ++r) {
    const auto i = static_cast<std::size_t>(r);
    mean_depth[i] = depth_count[i] > 0 ? depth_sum[i] / depth_count[i] : -1.0;
    if (depth_count[i] > 0 && options.min_area <= map.regions[i].area) {
      const auto c = static_cast<std::size_t>(map.regions[i].class_index);
      result.class_depth_sum[c] += depth_sum[i];
      result.class_depth_count[c] += depth_count[i];
    }
  }

  // Adjacent regions: any two region ids within a Chebyshev radius of 2.
  std::set<std::pair<int, int>> adjacent;
  constexpr int kRadius = 2;
  for (int y = 0; y < layout.height(); ++y) {
    for (int x = 0; x < layout.width(); ++x) {
      const std::int32_t region = map.region_of(x, y);
      if (region == RegionMap::kNone) continue;
      for (int ny = y; ny <= std::min(y + kRadius, layout.height() - 1); ++ny) {
        const int start_x = ny == y ? x + 1 : std::max(0, x - kRadius);
        for (int nx = start_x; nx <= std::min(x + kRadius, layout.width() - 1); ++nx) {
          const std::int32_t other = map.region_of(nx, ny);
          if (other == RegionMap::kNone || other == region) continue;
          adjacent.insert({std::min(region, other), std::max(region, other)});
        }
      }
    }
  }

  for (const auto& [ra, rb] : adjacent) {
    const auto& info_a = map.regions[static_cast<std::size_t>(ra)];
    const auto& info_b = map.regions[static_cast<std::size_t>(rb)];
    if (info_a.class_index == info_b.class_index) continue;
    if (options.min_area > 0 &&
        (info_a.area < options.min_area || info_b.area < options.min_area)) {
      continue;
    }
    const double da = mean_depth[static_cast<std::size_t>(ra)];
    const double db = mean_depth[static_cast<std::size_t>(rb)];
    if (da < 0.0 || db < 0.0 || da == db) continue;

    int lo = info_a.class_index, hi = info_b.class_index;
    bool lo_front = da < db;
    if (lo > hi) {
      std::swap(lo, hi);
      lo_front = !lo_front;
    }
    auto& entry = result.votes[{lo, hi}];
    if (lo_front) {
      ++entry.first;
    } else {
      ++entry.second;
    }
  }
  return result;
}

}  // namespace

OrderingTable derive_ordering(std::span<const DepthPair> pairs, int class_count,
                              std::optional<std::vector<int>> fallback,
                              const ExtractOptions& options, int jobs) {
  if (class_count < 1) fail(ErrorKind::invalid_input, "class_count must be >= 1");

  std::vector<ImageVotes> per_image(pairs.size());
  parallel_for(static_cast<std::int64_t>(pairs.size()), jobs, [&](std::int64_t i) {
    per_image[static_cast<std::size_t>(i)] =
        vote_one_pair(pairs[static_cast<std::size_t>(i)], class_count, options);
  });

  std::map<std::pair<int, int>, std::pair<std::int64_t, std::int64_t>> votes;
  std::vector<double> class_depth_sum(static_cast<std::size_t>(class_count), 0.0);
  std::vector<std::int64_t> class_depth_count(static_cast<std::size_t>(class_count), 0);
  for (const auto& image : per_image) {
    for (const auto& [key, value] : image.votes) {
      auto& entry = votes[key];
      entry.first += value.first;
      entry.second += value.second;
    }
    for (int c = 0; c < class_count; ++c) {
      class_depth_sum[static_cast<std::size_t>(c)] += image.class_depth_sum[static_cast<std::size_t>(c)];
      class_depth_count[static_cast<std::size_t>(c)] += image.class_depth_count[static_cast<std::size_t>(c)];
    }
  }

  const bool any_depth = std::any_of(class_depth_count.begin(), class_depth_count.end(),
                                     [](std::int64_t n) { return n > 0; });
  std::vector<int> fallback_order;
  if (fallback) {
    if (static_cast<int>(fallback->size()) != class_count) {
      fail(ErrorKind::invalid_input, "fallback order must list every class exactly once");
    }
    fallback_order = *fallback;
  } else if (any_depth) {
    // Far classes paint first: sort by global mean depth descending.
    std::vector<int> order(static_cast<std::size_t>(class_count));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const auto ia = static_cast<std::size_t>(a);
      const auto ib = static_cast<std::size_t>(b);
      const double da = class_depth_count[ia] > 0 ? class_depth_sum[ia] / class_depth_count[ia]
                                                  : -1.0;
      const double db = class_depth_count[ib] > 0 ? class_depth_sum[ib] / class_depth_count[ib]
                                                  : -1.0;
      return da > db;
    });
    fallback_order = order;
  } else {
    fail(ErrorKind::invalid_input,
         "no depth votes available; a fallback back-to-front class order is required");
  }

  OrderingTable table(std::move(fallback_order));
  for (const auto& [key, value] : votes) {
    table.add_votes(key.first, key.second, value.first, value.second);
  }
  return table;
}

namespace {

bool segments_overlap(const PlacedSegment& a, const PlacedSegment& b) {
  const auto box = intersect(a.box, b.box);
  if (!box) return false;
  for (int y = box->y0; y < box->y1(); ++y) {
    for (int x = box->x0; x < box->x1(); ++x) {
      if (a.mask(x - a.box.x0, y - a.box.y0) && b.mask(x - b.box.x0, y - b.box.y0)) return true;
    }
  }
  return false;
}

/// Topological order over the overlap-restricted front/back relation.
/// Ready nodes (and cycle breaks) pop lowest (fallback rank, region id) so
/// the result is deterministic and matches the fallback order on full cycles.
std::vector<int> paint_order(const std::vector<const PlacedRegion*>& regions,
                             const std::vector<std::vector<int>>& edges_out,
                             std::vector<int> in_degree, const OrderingTable& ordering) {
  const int n = static_cast<int>(regions.size());
  auto key = [&](int i) {
    return std::pair<int, int>{
        ordering.fallback_rank(regions[static_cast<std::size_t>(i)]->class_index),
        regions[static_cast<std::size_t>(i)]->region_id};
  };
  auto heap_less = [&](int a, int b) { return key(a) > key(b); };  // min-heap
  std::priority_queue<int, std::vector<int>, decltype(heap_less)> ready(heap_less);

  std::vector<char> placed(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (in_degree[static_cast<std::size_t>(i)] == 0) ready.push(i);
  }

  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(order.size()) < n) {
    int node = -1;
    while (!ready.empty()) {
      const int candidate = ready.top();
      ready.pop();
      if (!placed[static_cast<std::size_t>(candidate)]) {
        node = candidate;
        break;
      }
    }
    if (node == -1) {
      // Cycle: break it at the smallest key among the remaining nodes.
      for (int i = 0; i < n; ++i) {
        if (!placed[static_cast<std::size_t>(i)] && (node == -1 || heap_less(node, i))) {
          node = i;
        }
      }
    }
    placed[static_cast<std::size_t>(node)] = 1;
    order.push_back(node);
    for (int next : edges_out[static_cast<std::size_t>(node)]) {
      if (placed[static_cast<std::size_t>(next)]) continue;
      if (--in_degree[static_cast<std::size_t>(next)] == 0) ready.push(next);
    }
  }
  return order;
}

}  // namespace

Canvas compose(const SemanticLayout& layout, std::vector<PlacedRegion> placements,
               const OrderingTable& ordering) {
  const FrameSize frame = layout.frame();
  Canvas canvas;
  canvas.rgb = ImageRgb8(frame.width, frame.height, Rgb8{0, 0, 0});
  canvas.state = Grid<std::uint8_t>(frame.width, frame.height,
                                    static_cast<std::uint8_t>(PixelState::missing));
  canvas.provenance = Grid<std::int32_t>(frame.width, frame.height, Canvas::kNoRegion);
  canvas.regions = std::move(placements);

  std::vector<int> paintable;
  for (int i = 0; i < static_cast<int>(canvas.regions.size()); ++i) {
    if (!canvas.regions[static_cast<std::size_t>(i)].segment.empty()) paintable.push_back(i);
  }

  // Front/back edges between overlapping pairs; back paints first.
  const int n = static_cast<int>(paintable.size());
  std::vector<std::vector<int>> edges_out(static_cast<std::size_t>(n));
  std::vector<int> in_degree(static_cast<std::size_t>(n), 0);
  std::vector<const PlacedRegion*> nodes;
  nodes.reserve(static_cast<std::size_t>(n));
  for (int i : paintable) nodes.push_back(&canvas.regions[static_cast<std::size_t>(i)]);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = *nodes[static_cast<std::size_t>(i)];
      const auto& b = *nodes[static_cast<std::size_t>(j)];
      if (!segments_overlap(a.segment, b.segment)) continue;
      int front_node;
      if (a.class_index == b.class_index) {
        front_node = a.region_id > b.region_id ? i : j;  // higher region id in front
      } else {
        front_node =
            ordering.front_class(a.class_index, b.class_index) == a.class_index ? i : j;
      }
      const int back_node = front_node == i ? j : i;
      edges_out[static_cast<std::size_t>(back_node)].push_back(front_node);
      ++in_degree[static_cast<std::size_t>(front_node)];
    }
  }

  const std::vector<int> order = paint_order(nodes, edges_out, std::move(in_degree), ordering);
  canvas.paint_order.clear();
  for (int node : order) {
    canvas.paint_order.push_back(paintable[static_cast<std::size_t>(node)]);
  }

  for (int index : canvas.paint_order) {
    const auto& region = canvas.regions[static_cast<std::size_t>(index)];
    const auto& seg = region.segment;
    for (int y = 0; y < seg.box.h; ++y) {
      for (int x = 0; x < seg.box.w; ++x) {
        if (!seg.mask(x, y)) continue;
        const int fx = seg.box.x0 + x;
        const int fy = seg.box.y0 + y;
        canvas.rgb(fx, fy) = seg.color(x, y);
        canvas.state(fx, fy) = static_cast<std::uint8_t>(PixelState::content);
        canvas.provenance(fx, fy) = region.region_id;
      }
    }
  }
  return canvas;
}

void elide_boundaries(Canvas& canvas, const ElideOptions& options) {
  if (options.interior_rate < 0.0 || options.interior_rate > 1.0) {
    fail(ErrorKind::invalid_input, "interior_rate must lie in [0, 1]");
  }
  if (options.band < 0.0) fail(ErrorKind::invalid_input, "band must be >= 0");
  const int threshold = static_cast<int>(std::floor(options.band * canvas.height()));
  if (threshold < 1 || canvas.paint_order.empty()) return;
  const std::int64_t threshold_sq = static_cast<std::int64_t>(threshold) * threshold;
  const FrameSize frame{canvas.width(), canvas.height()};

  // Paint position per region id, for the "in front" test.
  std::map<int, int> position;
  for (std::size_t i = 0; i < canvas.paint_order.size(); ++i) {
    const auto& region = canvas.regions[static_cast<std::size_t>(canvas.paint_order[i])];
    position[region.region_id] = static_cast<int>(i);
  }

  Rng rng(options.seed);
  constexpr Rgb8 kWhite{255, 255, 255};
  constexpr Rgb8 kBlack{0, 0, 0};

  struct SegmentWindow {
    BoundingBox window;
    Grid<std::int32_t> to_inside;   // squared distance to the mask
    Grid<std::int32_t> to_outside;  // squared distance to the in-frame complement
  };
  std::vector<SegmentWindow> windows(canvas.paint_order.size());
  for (std::size_t i = 0; i < canvas.paint_order.size(); ++i) {
    const auto& region = canvas.regions[static_cast<std::size_t>(canvas.paint_order[i])];
    const auto& seg = region.segment;
    auto& win = windows[i];
    win.window = dilate_box(seg.box, threshold + 1, frame);
    MaskGrid inside(win.window.w, win.window.h, 0);
    for (int y = 0; y < win.window.h; ++y) {
      for (int x = 0; x < win.window.w; ++x) {
        const int fx = win.window.x0 + x;
        const int fy = win.window.y0 + y;
        inside(x, y) = seg.box.contains_point(fx, fy) &&
                               seg.mask(fx - seg.box.x0, fy - seg.box.y0)
                           ? 1
                           : 0;
      }
    }
    MaskGrid outside(win.window.w, win.window.h, 0);
    for (int y = 0; y < win.window.h; ++y) {
      for (int x = 0; x < win.window.w; ++x) outside(x, y) = inside(x, y) ? 0 : 1;
    }
    win.to_inside = squared_distance_to_set(inside);
    win.to_outside = squared_distance_to_set(outside);
  }

  // Interior pass: band pixels still owned by the segment go white.
  for (std::size_t i = 0; i < canvas.paint_order.size(); ++i) {
    const auto& region = canvas.regions[static_cast<std::size_t>(canvas.paint_order[i])];
    const auto& win = windows[i];
    for (int y = 0; y < win.window.h; ++y) {
      for (int x = 0; x < win.window.w; ++x) {
        if (win.to_outside(x, y) == 0 || win.to_outside(x, y) > threshold_sq) continue;
        const int fx = win.window.x0 + x;
        const int fy = win.window.y0 + y;
        if (canvas.provenance(fx, fy) != region.region_id) continue;
        if (canvas.state(fx, fy) != static_cast<std::uint8_t>(PixelState::content)) continue;
        if (!rng.bernoulli(options.interior_rate)) continue;
        canvas.state(fx, fy) = static_cast<std::uint8_t>(PixelState::interior_elided);
        canvas.rgb(fx, fy) = kWhite;
      }
    }
  }

  // Exterior pass: band pixels outside the segment go black unless a
  // front-painted segment owns them as content.
  for (std::size_t i = 0; i < canvas.paint_order.size(); ++i) {
    const auto& region = canvas.regions[static_cast<std::size_t>(canvas.paint_order[i])];
    if (std::find(options.exterior_exclude_classes.begin(),
                  options.exterior_exclude_classes.end(),
                  region.class_index) != options.exterior_exclude_classes.end()) {
      continue;
    }
    const auto& win = windows[i];
    const int my_position = position.at(region.region_id);
    for (int y = 0; y < win.window.h; ++y) {
      for (int x = 0; x < win.window.w; ++x) {
        if (win.to_inside(x, y) == 0 || win.to_inside(x, y) > threshold_sq) continue;
        const int fx = win.window.x0 + x;
        const int fy = win.window.y0 + y;
        const std::int32_t owner = canvas.provenance(fx, fy);
        if (owner != Canvas::kNoRegion &&
            canvas.state(fx, fy) == static_cast<std::uint8_t>(PixelState::content)) {
          const auto it = position.find(owner);
          if (it != position.end() && it->second > my_position) continue;  // painted in front
        }
        canvas.state(fx, fy) = static_cast<std::uint8_t>(PixelState::exterior_elided);
        canvas.rgb(fx, fy) = kBlack;
        if (canvas.provenance(fx, fy) == Canvas::kNoRegion) {
          canvas.provenance(fx, fy) = region.region_id;  // banding region owns it now
        }
      }
    }
  }
}

}  // namespace collage
