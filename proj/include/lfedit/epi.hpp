// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lfedit/lightfield.hpp"

namespace lfedit {

enum class EpiMode { kHorizontal, kVertical };

struct EpiSlice {
  EpiMode mode = EpiMode::kHorizontal;
  int angular_fix = 0;  // v for horizontal EPIs, u for vertical ones
  int spatial_fix = 0;  // y for horizontal EPIs, x for vertical ones
};

/// Epipolar-plane image: [1,3,A,S] with A the traversed angular extent and S
/// the traversed spatial extent.
struct Epi {
  Tensor image;
  EpiSlice slice;
};

/// Horizontal: EPI[u][x] = view(angular_fix, u)[spatial_fix][x], shape [N, W].
/// Vertical:   EPI[v][y] = view(v, angular_fix)[y][spatial_fix], shape [M, H].
Epi extract_epi(const LightField& lf, EpiSlice slice);

/// Mean over pixels and channels of |dI/dx| + |dI/dy| by forward
/// differences, each averaged over the positions where it is defined.
double average_gradient(const Tensor& patch);

}  // namespace lfedit
