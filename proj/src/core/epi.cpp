// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/epi.hpp"

#include <cmath>

#include "lfedit/errors.hpp"

namespace lfedit {

Epi extract_epi(const LightField& lf, EpiSlice slice) {
  const GridShape grid = lf.grid();
  const bool horizontal = slice.mode == EpiMode::kHorizontal;
  const int angular_extent = horizontal ? grid.rows : grid.cols;
  const int spatial_extent = horizontal ? lf.height() : lf.width();
  require(slice.angular_fix >= 0 && slice.angular_fix < angular_extent,
          "extract_epi: angular index " + std::to_string(slice.angular_fix) + " outside [0," +
              std::to_string(angular_extent) + ")");
  require(slice.spatial_fix >= 0 && slice.spatial_fix < spatial_extent,
          "extract_epi: spatial index " + std::to_string(slice.spatial_fix) + " outside [0," +
              std::to_string(spatial_extent) + ")");

  const Tensor& views = lf.views();
  if (horizontal) {
    Tensor img(1, 3, grid.cols, lf.width());
    for (int u = 0; u < grid.cols; ++u) {
      const int i = grid.index({slice.angular_fix, u});
      for (int c = 0; c < 3; ++c)
        for (int x = 0; x < lf.width(); ++x) img(0, c, u, x) = views(i, c, slice.spatial_fix, x);
    }
    return {std::move(img), slice};
  }
  Tensor img(1, 3, grid.rows, lf.height());
  for (int v = 0; v < grid.rows; ++v) {
    const int i = grid.index({v, slice.angular_fix});
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < lf.height(); ++y) img(0, c, v, y) = views(i, c, y, slice.spatial_fix);
  }
  return {std::move(img), slice};
}

double average_gradient(const Tensor& patch) {
  const int h = patch.height(), w = patch.width();
  require(h >= 2 && w >= 2, "average_gradient: patch must be at least 2x2");
  double gx = 0.0, gy = 0.0;
  for (int n = 0; n < patch.batch(); ++n)
    for (int c = 0; c < patch.channels(); ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double v = patch(n, c, y, x);
          if (x + 1 < w) gx += std::abs(patch(n, c, y, x + 1) - v);
          if (y + 1 < h) gy += std::abs(patch(n, c, y + 1, x) - v);
        }
  const double planes = static_cast<double>(patch.batch()) * patch.channels();
  return gx / (planes * h * (w - 1)) + gy / (planes * (h - 1) * w);
}

}  // namespace lfedit
