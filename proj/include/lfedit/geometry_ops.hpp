// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "lfedit/kernels/sampling.hpp"

// Scalar-generic forward/backward primitives behind disparity warping and the
// forward-backward consistency check. They operate on one sample's planes;
// disparity planes are [2, h, w] with channel 0 horizontal and channel 1
// vertical, in pixels per unit angular step.

namespace lfedit {

/// Integer angular displacement (vertical, horizontal).
struct AngularOffset {
  int dv = 0;
  int du = 0;
  bool operator==(const AngularOffset&) const = default;
};

namespace geometry_ops {

template <typename T>
void warp_coords(const T* disp, int h, int w, AngularOffset delta, T* cx, T* cy) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      cx[p] = static_cast<T>(x) + static_cast<T>(delta.du) * disp[p];
      cy[p] = static_cast<T>(y) + static_cast<T>(delta.dv) * disp[plane + p];
    }
}

/// out(x) = src(x + delta (.) D(x)), bilinear, clamp-to-edge.
template <typename T>
void warp_forward(const T* src, int channels, int h, int w, const T* disp, AngularOffset delta,
                  T* out, std::uint8_t* valid) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<T> cx(plane), cy(plane);
  warp_coords(disp, h, w, delta, cx.data(), cy.data());
  kernels::parallel::bilinear_forward(src, channels, h, w, cx.data(), cy.data(),
                                      static_cast<int>(plane), out, valid);
}

/// Accumulates into grad_src / grad_disp (either may be null).
template <typename T>
void warp_backward(const T* src, int channels, int h, int w, const T* disp, AngularOffset delta,
                   const T* grad_out, T* grad_src, T* grad_disp) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<T> cx(plane), cy(plane), gx, gy;
  warp_coords(disp, h, w, delta, cx.data(), cy.data());
  if (grad_disp) gx.resize(plane), gy.resize(plane);
  kernels::parallel::bilinear_backward(src, channels, h, w, cx.data(), cy.data(),
                                       static_cast<int>(plane), grad_out, grad_src,
                                       grad_disp ? gx.data() : nullptr,
                                       grad_disp ? gy.data() : nullptr);
  if (!grad_disp) return;
  for (std::size_t p = 0; p < plane; ++p) {
    grad_disp[p] += static_cast<T>(delta.du) * gx[p];
    grad_disp[plane + p] += static_cast<T>(delta.dv) * gy[p];
  }
}

/// out(x) = || D_i(x) - D_j(x + delta (.) D_i(x)) ||_1
template <typename T>
void consistency_forward(const T* disp_i, const T* disp_j, int h, int w, AngularOffset delta,
                         T* out) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<T> cx(plane), cy(plane), sampled(2 * plane);
  warp_coords(disp_i, h, w, delta, cx.data(), cy.data());
  kernels::parallel::bilinear_forward(disp_j, 2, h, w, cx.data(), cy.data(),
                                      static_cast<int>(plane), sampled.data(), nullptr);
  for (std::size_t p = 0; p < plane; ++p)
    out[p] = std::abs(disp_i[p] - sampled[p]) + std::abs(disp_i[plane + p] - sampled[plane + p]);
}

template <typename T>
T sign_of(T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); }

/// Accumulates into grad_i / grad_j (either may be null).
template <typename T>
void consistency_backward(const T* disp_i, const T* disp_j, int h, int w, AngularOffset delta,
                          const T* grad_out, T* grad_i, T* grad_j) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<T> cx(plane), cy(plane), sampled(2 * plane), g_sampled(2 * plane), gx(plane), gy(plane);
  warp_coords(disp_i, h, w, delta, cx.data(), cy.data());
  kernels::parallel::bilinear_forward(disp_j, 2, h, w, cx.data(), cy.data(),
                                      static_cast<int>(plane), sampled.data(), nullptr);
  for (std::size_t p = 0; p < plane; ++p)
    for (int c = 0; c < 2; ++c) {
      const std::size_t q = c * plane + p;
      const T g = grad_out[p] * sign_of(disp_i[q] - sampled[q]);
      if (grad_i) grad_i[q] += g;
      g_sampled[q] = -g;
    }
  kernels::parallel::bilinear_backward(disp_j, 2, h, w, cx.data(), cy.data(),
                                       static_cast<int>(plane), g_sampled.data(), grad_j,
                                       gx.data(), gy.data());
  if (!grad_i) return;
  for (std::size_t p = 0; p < plane; ++p) {
    grad_i[p] += static_cast<T>(delta.du) * gx[p];
    grad_i[plane + p] += static_cast<T>(delta.dv) * gy[p];
  }
}

}  // namespace geometry_ops
}  // namespace lfedit
