// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/lightfield.hpp"

#include <algorithm>
#include <cmath>

#include "lfedit/errors.hpp"

namespace lfedit {

void require_unit_range(const Tensor& t, const std::string& what) {
  const auto v = t.values();
  const bool ok = std::all_of(v.begin(), v.end(), [](float x) { return x >= 0.0f && x <= 1.0f; });
  require(ok, what + ": values must lie in [0,1]");
}

void require_finite(const Tensor& t, const std::string& what) {
  const auto v = t.values();
  const bool ok = std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  require(ok, what + ": non-finite value");
}

LightField::LightField(GridShape grid, Tensor views) : grid_(grid), views_(std::move(views)) {
  require(grid_.rows >= 1 && grid_.cols >= 1, "light field grid must be at least 1x1");
  require(grid_.rows % 2 == 1 && grid_.cols % 2 == 1,
          "light field grid " + grid_.str() + " has no central view (needs odd extents)");
  require(views_.batch() == grid_.count() && views_.channels() == 3,
          "light field views " + shape_string(views_.shape()) + " do not match grid " + grid_.str());
  require(views_.height() > 0 && views_.width() > 0, "light field views are empty");
  require_unit_range(views_, "light field");
}

LightField LightField::tiled(GridShape grid, const Tensor& image) {
  require(image.batch() == 1 && image.channels() == 3, "tiled: expected a [1,3,H,W] image");
  Tensor views(grid.count(), 3, image.height(), image.width());
  for (int i = 0; i < grid.count(); ++i)
    std::copy_n(image.data(), image.size(), views.data() + i * image.size());
  return LightField(grid, std::move(views));
}

VisualChannels::VisualChannels(Tensor image) : image_(std::move(image)) {
  require(image_.batch() == 1 && image_.channels() == 3,
          "visual channels must be [1,3,H,W], got " + shape_string(image_.shape()));
  require_unit_range(image_, "visual channels");
}

MetaChannel::MetaChannel(Tensor data) : data_(std::move(data)) {
  require(data_.batch() == 1 && data_.channels() >= 1,
          "meta channel must be [1,K,H,W] with K >= 1, got " + shape_string(data_.shape()));
  require_finite(data_, "meta channel");
}

void Representation::validate() const {
  require(visual.height() == meta.height() && visual.width() == meta.width(),
          "representation: visual and meta channels are not spatially aligned");
  require(manifest.meta_channels == meta.channels(), "representation: manifest K mismatch");
  require(manifest.height == visual.height() && manifest.width == visual.width(),
          "representation: manifest size mismatch");
  require(manifest.grid.rows >= 1 && manifest.grid.cols >= 1, "representation: bad grid");
}

}  // namespace lfedit
