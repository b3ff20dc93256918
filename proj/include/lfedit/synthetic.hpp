// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "lfedit/lightfield.hpp"

// Procedural light fields with known geometry.

namespace lfedit::synthetic {

/// Smooth random RGB texture defined on the whole plane: a sum of oriented
/// sinusoids per channel around mid-grey, clamped to [0,1].
class Texture {
 public:
  explicit Texture(std::uint64_t seed, int components = 6, double min_freq = 0.15, double max_freq = 0.6);
  float operator()(int channel, double x, double y) const;

 private:
  struct Wave {
    double amplitude, fx, fy, phase;
  };
  std::vector<Wave> waves_[3];
};

/// View (v,u) shows the texture translated by ((u - u_c) d, (v - v_c) d):
/// view(x) = T(x - (u_i - u_c) d). The disparity is (d, d) everywhere.
LightField constant_disparity(GridShape grid, int height, int width, double d, std::uint64_t seed);

struct TwoPlaneScene {
  LightField lightfield;
  Tensor disparity;  // [MN,2,H,W] ground truth per view
  Tensor band;       // [MN,1,H,W] 1 where view i sees background hidden from the central view
  double background_disparity = 0.0;
  double foreground_disparity = 0.0;
};

/// Full-height foreground stripe over columns [x0, x1) of the central view
/// with disparity d_fg in front of a textured background with disparity d_bg.
TwoPlaneScene two_plane(GridShape grid, int height, int width, double d_bg, double d_fg, int x0, int x1,
                        std::uint64_t seed);

}  // namespace lfedit::synthetic
