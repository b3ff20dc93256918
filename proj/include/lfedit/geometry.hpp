// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "lfedit/geometry_ops.hpp"
#include "lfedit/lightfield.hpp"

namespace lfedit {

inline constexpr double kDefaultMaxDisparity = 4.0;

/// Per-pixel (horizontal, vertical) disparity, [1,2,H,W], pixels per unit
/// angular step.
class DisparityMap {
 public:
  DisparityMap() = default;
  explicit DisparityMap(Tensor data);
  static DisparityMap constant(int h, int w, float horizontal, float vertical);
  const Tensor& data() const { return data_; }
  int height() const { return data_.height(); }
  int width() const { return data_.width(); }
  /// Largest |component|.
  float max_magnitude() const;

 private:
  Tensor data_;
};

/// Non-negative forward-backward inconsistency, [1,1,H,W].
struct OcclusionMap {
  Tensor data;
};

struct WarpedView {
  Tensor image;                      // [1,3,H,W]
  std::vector<std::uint8_t> valid;   // H*W, 1 where the sample fell inside the source
};

struct SampledImage {
  Tensor image;
  std::vector<std::uint8_t> valid;
};

/// Samples `image` ([1,C,H,W]) at `coords` ([1,2,h,w], channel 0 = x,
/// channel 1 = y). Throws ContractError on NaN coordinates.
SampledImage bilinear_sample(const Tensor& image, const Tensor& coords);

/// Synthesizes the view at angular offset -`delta` from `source`:
/// out(x) = source(x + delta (.) D(x)).
WarpedView warp_view(const Tensor& source, const DisparityMap& disparity, AngularOffset delta);

/// O(x) = || D_i(x) - D_c(x + delta (.) D_i(x)) ||_1 with delta = u_c - u_i.
OcclusionMap occlusion_map(const DisparityMap& disp_i, const DisparityMap& disp_c,
                           AngularOffset delta);

/// Shift-and-add refocus: per pixel, the mean over views of
/// view_i(x + (u_i - u_c) * slope), ignoring samples that leave the view.
/// Pixels with no valid sample take the central view's value.
Tensor refocus(const LightField& lf, double slope, double max_disparity = kDefaultMaxDisparity);

}  // namespace lfedit
