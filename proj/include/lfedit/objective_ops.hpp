// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "lfedit/errors.hpp"
#include "lfedit/kernels/ssim.hpp"
#include "lfedit/tensor.hpp"

// Scalar-generic loss primitives shared by the autograd ops (float) and the
// gradient checks (double).

namespace lfedit::objective_ops {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// mean |a - b|; accumulates scale * d/da into grad_a when given.
template <typename T>
T l1_mean(const BasicTensor<T>& a, const BasicTensor<T>& b, BasicTensor<T>* grad_a = nullptr,
          T scale = T(1)) {
  require(a.same_shape(b), "l1: shape mismatch " + shape_string(a.shape()) + " vs " +
                               shape_string(b.shape()));
  const std::size_t n = a.size();
  const T* pa = a.data();
  const T* pb = b.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::abs(pa[i] - pb[i]);
  if (grad_a) {
    T* g = grad_a->data();
    const T s = scale / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T d = pa[i] - pb[i];
      g[i] += d > T(0) ? s : (d < T(0) ? -s : T(0));
    }
  }
  return static_cast<T>(total / static_cast<double>(n));
}

/// Mean over batch and channels of the per-plane mean SSIM; accumulates
/// scale * d/da into grad_a when given.
template <typename T>
T ssim_mean(const BasicTensor<T>& a, const BasicTensor<T>& b, BasicTensor<T>* grad_a = nullptr,
            T scale = T(1), int window = kSsimWindow, double sigma = kSsimSigma) {
  require(a.same_shape(b), "ssim: shape mismatch " + shape_string(a.shape()) + " vs " +
                               shape_string(b.shape()));
  require(window >= 1 && window % 2 == 1 && sigma > 0.0, "ssim: window must be odd and sigma positive");
  require(a.height() >= window && a.width() >= window,
          "ssim: images must be at least " + std::to_string(window) + "x" + std::to_string(window));
  const std::vector<T> taps = kernels::gaussian_taps<T>(window, sigma);
  const int planes = a.batch() * a.channels();
  const T plane_scale = scale / static_cast<T>(planes);
  double total = 0.0;
  for (int n = 0; n < a.batch(); ++n)
    for (int c = 0; c < a.channels(); ++c)
      total += kernels::parallel::ssim_plane(a.plane(n, c), b.plane(n, c), a.height(), a.width(),
                                             taps, grad_a ? grad_a->plane(n, c) : nullptr,
                                             plane_scale);
  return static_cast<T>(total / planes);
}

}  // namespace lfedit::objective_ops
