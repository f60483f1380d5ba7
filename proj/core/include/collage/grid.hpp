#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace collage {

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

struct Rgbf {
  float r = 0.f;
  float g = 0.f;
  float b = 0.f;
  friend bool operator==(const Rgbf&, const Rgbf&) = default;
};

/// Dense row-major raster addressed as (x, y).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width),
        height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    assert(width >= 0 && height >= 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  T& operator()(int x, int y) {
    assert(in_bounds(x, y));
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const {
    assert(in_bounds(x, y));
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using MaskGrid = Grid<std::uint8_t>;   // binary, 0 or 1
using LabelGrid = Grid<std::uint8_t>;  // class indices; 255 reserved for "unlabeled"
using ImageRgb8 = Grid<Rgb8>;
using ImageRgbF = Grid<Rgbf>;

}  // namespace collage
