#include "collage/distance.hpp"

#include <algorithm>
#include <vector>

namespace collage {
namespace {

// Large finite sentinel: parabolas rooted at it lose to any real one over
// the whole grid, so unset rows fall out naturally.
constexpr double kInf = 1e20;

/// 1D squared-distance lower envelope (two-pass distance transform).
void transform_1d(const double* f, int n, double* out, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + static_cast<double>(q) * q) -
                (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + static_cast<double>(q) * q) -
           (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

Grid<std::int32_t> squared_distance_to_set(const MaskGrid& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Grid<std::int32_t> result(w, h, kUnreachableDistance);
  if (w == 0 || h == 0) return result;

  Grid<double> tmp(w, h, kInf);
  const int n = std::max(w, h);
  std::vector<double> f(n), out(n), z(n + 1);
  std::vector<int> v(n);

  // Columns: distance along y to the nearest set pixel of each column.
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = mask(x, y) ? 0.0 : kInf;
    transform_1d(f.data(), h, out.data(), v.data(), z.data());
    for (int y = 0; y < h; ++y) tmp(x, y) = out[y];
  }
  // Rows over the column results.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = tmp(x, y);
    transform_1d(f.data(), w, out.data(), v.data(), z.data());
    for (int x = 0; x < w; ++x) {
      result(x, y) = out[x] >= 1e18 ? kUnreachableDistance
                                    : static_cast<std::int32_t>(out[x] + 0.5);
    }
  }
  return result;
}

}  // namespace collage
