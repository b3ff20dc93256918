// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "lfedit/errors.hpp"

namespace lfedit {

DisparityMap::DisparityMap(Tensor data) : data_(std::move(data)) {
  require(data_.batch() == 1 && data_.channels() == 2,
          "disparity map must be [1,2,H,W], got " + shape_string(data_.shape()));
  require_finite(data_, "disparity map");
}

DisparityMap DisparityMap::constant(int h, int w, float horizontal, float vertical) {
  Tensor t(1, 2, h, w);
  std::fill_n(t.plane(0, 0), t.plane_size(), horizontal);
  std::fill_n(t.plane(0, 1), t.plane_size(), vertical);
  return DisparityMap(std::move(t));
}

float DisparityMap::max_magnitude() const {
  float m = 0.0f;
  for (float v : data_.values()) m = std::max(m, std::abs(v));
  return m;
}

SampledImage bilinear_sample(const Tensor& image, const Tensor& coords) {
  require(image.batch() == 1, "bilinear_sample: expected a single image");
  require(coords.batch() == 1 && coords.channels() == 2, "bilinear_sample: coords must be [1,2,h,w]");
  for (float v : coords.values())
    if (std::isnan(v)) throw ContractError("bilinear_sample: NaN coordinate");
  const int count = static_cast<int>(coords.plane_size());
  SampledImage out{Tensor(1, image.channels(), coords.height(), coords.width()),
                   std::vector<std::uint8_t>(count)};
  kernels::parallel::bilinear_forward(image.data(), image.channels(), image.height(), image.width(),
                                      coords.plane(0, 0), coords.plane(0, 1), count,
                                      out.image.data(), out.valid.data());
  return out;
}

WarpedView warp_view(const Tensor& source, const DisparityMap& disparity, AngularOffset delta) {
  require(source.batch() == 1, "warp_view: expected a single source image");
  require(source.height() == disparity.height() && source.width() == disparity.width(),
          "warp_view: source " + shape_string(source.shape()) + " and disparity " +
              shape_string(disparity.data().shape()) + " are not aligned");
  WarpedView out{Tensor(1, source.channels(), source.height(), source.width()),
                 std::vector<std::uint8_t>(source.plane_size())};
  geometry_ops::warp_forward(source.data(), source.channels(), source.height(), source.width(),
                             disparity.data().data(), delta, out.image.data(), out.valid.data());
  return out;
}

OcclusionMap occlusion_map(const DisparityMap& disp_i, const DisparityMap& disp_c,
                           AngularOffset delta) {
  require(disp_i.data().same_shape(disp_c.data()), "occlusion_map: disparity maps are not aligned");
  OcclusionMap out{Tensor(1, 1, disp_i.height(), disp_i.width())};
  geometry_ops::consistency_forward(disp_i.data().data(), disp_c.data().data(), disp_i.height(),
                                    disp_i.width(), delta, out.data.data());
  return out;
}

Tensor refocus(const LightField& lf, double slope, double max_disparity) {
  require(std::abs(slope) <= max_disparity,
          "refocus: |slope| " + std::to_string(slope) + " exceeds d_max " + std::to_string(max_disparity));
  const GridShape grid = lf.grid();
  const AngularIndex center = grid.center();
  const int h = lf.height(), w = lf.width();
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  Tensor sum(1, 3, h, w);
  std::vector<int> hits(plane, 0);
  std::vector<float> cx(plane), cy(plane), sample(3 * plane);
  std::vector<std::uint8_t> valid(plane);
  for (int i = 0; i < grid.count(); ++i) {
    const AngularIndex a = grid.at(i);
    const float ox = static_cast<float>((a.u - center.u) * slope);
    const float oy = static_cast<float>((a.v - center.v) * slope);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        cx[static_cast<std::size_t>(y) * w + x] = static_cast<float>(x) + ox;
        cy[static_cast<std::size_t>(y) * w + x] = static_cast<float>(y) + oy;
      }
    kernels::parallel::bilinear_forward(lf.views().plane(i, 0), 3, h, w, cx.data(), cy.data(),
                                        static_cast<int>(plane), sample.data(), valid.data());
    for (std::size_t p = 0; p < plane; ++p) {
      if (!valid[p]) continue;
      ++hits[p];
      for (int c = 0; c < 3; ++c) sum.plane(0, c)[p] += sample[c * plane + p];
    }
  }
  const Tensor central = lf.central_view();
  for (std::size_t p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c)
      sum.plane(0, c)[p] = hits[p] ? sum.plane(0, c)[p] / static_cast<float>(hits[p])
                                   : central.plane(0, c)[p];
  return sum;
}

}  // namespace lfedit
