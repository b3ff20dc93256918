// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

// Bilinear sampling of a [channels, h, w] plane stack at `count` arbitrary
// coordinates (cx, cy) in pixel units. Coordinates outside [0, w-1] x
// [0, h-1] are clamped to the border and reported invalid; clamped axes
// carry no coordinate gradient.

namespace lfedit::kernels {

/// Clamps into [0, hi]; NaN maps to 0 so that it never reaches an index.
template <typename T>
inline T clamp_coord(T v, T hi) {
  return v > T(0) ? (v < hi ? v : hi) : T(0);
}

template <typename T>
struct SampleSite {
  int x0, x1, y0, y1;
  T fx, fy;
  bool clamped_x, clamped_y;
};

template <typename T>
inline SampleSite<T> locate(T cx, T cy, int h, int w) {
  SampleSite<T> s{};
  const T max_x = static_cast<T>(w - 1), max_y = static_cast<T>(h - 1);
  s.clamped_x = !(cx >= T(0) && cx <= max_x);
  s.clamped_y = !(cy >= T(0) && cy <= max_y);
  const T x = clamp_coord(cx, max_x);
  const T y = clamp_coord(cy, max_y);
  s.x0 = static_cast<int>(std::floor(x));
  s.y0 = static_cast<int>(std::floor(y));
  s.x1 = std::min(s.x0 + 1, w - 1);
  s.y1 = std::min(s.y0 + 1, h - 1);
  s.fx = x - static_cast<T>(s.x0);
  s.fy = y - static_cast<T>(s.y0);
  return s;
}

namespace parallel {

template <typename T>
void bilinear_forward(const T* src, int channels, int h, int w, const T* cx, const T* cy,
                      int count, T* out, std::uint8_t* valid) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < count; ++p) {
    const SampleSite<T> s = locate(cx[p], cy[p], h, w);
    if (valid) valid[p] = !(s.clamped_x || s.clamped_y);
    const T w00 = (1 - s.fx) * (1 - s.fy), w01 = s.fx * (1 - s.fy);
    const T w10 = (1 - s.fx) * s.fy, w11 = s.fx * s.fy;
    for (int c = 0; c < channels; ++c) {
      const T* img = src + c * plane;
      out[c * static_cast<std::size_t>(count) + p] =
          w00 * img[s.y0 * w + s.x0] + w01 * img[s.y0 * w + s.x1] +
          w10 * img[s.y1 * w + s.x0] + w11 * img[s.y1 * w + s.x1];
    }
  }
}

/// grad_src (optional) is accumulated; grad_cx / grad_cy (optional) are
/// overwritten with d(sum grad_out * out)/d(coord).
template <typename T>
void bilinear_backward(const T* src, int channels, int h, int w, const T* cx, const T* cy,
                       int count, const T* grad_out, T* grad_src, T* grad_cx, T* grad_cy) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  if (grad_cx || grad_cy) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < count; ++p) {
      const SampleSite<T> s = locate(cx[p], cy[p], h, w);
      T gx = 0, gy = 0;
      for (int c = 0; c < channels; ++c) {
        const T* img = src + c * plane;
        const T g = grad_out[c * static_cast<std::size_t>(count) + p];
        const T a = img[s.y0 * w + s.x0], b = img[s.y0 * w + s.x1];
        const T d = img[s.y1 * w + s.x0], e = img[s.y1 * w + s.x1];
        gx += g * ((1 - s.fy) * (b - a) + s.fy * (e - d));
        gy += g * ((1 - s.fx) * (d - a) + s.fx * (e - b));
      }
      if (grad_cx) grad_cx[p] = s.clamped_x ? T(0) : gx;
      if (grad_cy) grad_cy[p] = s.clamped_y ? T(0) : gy;
    }
  }
  if (grad_src) {
    // Scatter is parallel over channels so that no two threads share a plane.
#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
      T* gimg = grad_src + c * plane;
      const T* gout = grad_out + c * static_cast<std::size_t>(count);
      for (int p = 0; p < count; ++p) {
        const SampleSite<T> s = locate(cx[p], cy[p], h, w);
        const T g = gout[p];
        gimg[s.y0 * w + s.x0] += g * (1 - s.fx) * (1 - s.fy);
        gimg[s.y0 * w + s.x1] += g * s.fx * (1 - s.fy);
        gimg[s.y1 * w + s.x0] += g * (1 - s.fx) * s.fy;
        gimg[s.y1 * w + s.x1] += g * s.fx * s.fy;
      }
    }
  }
}

}  // namespace parallel

namespace reference {

// Tent-kernel formulation: out = sum_ij k(x - i) k(y - j) img[j][i] over the
// integer neighbourhood, with indices clamped into the image.
template <typename T>
T tent(T d) { return std::max(T(0), T(1) - std::abs(d)); }

// Right derivative of the tent, matching the floor-based cell convention.
template <typename T>
T tent_slope(T d) {
  if (d >= T(-1) && d < T(0)) return T(1);
  if (d >= T(0) && d < T(1)) return T(-1);
  return T(0);
}

template <typename T>
void bilinear_forward(const T* src, int channels, int h, int w, const T* cx, const T* cy,
                      int count, T* out, std::uint8_t* valid) {
  for (int p = 0; p < count; ++p) {
    const T x = clamp_coord(cx[p], T(w - 1));
    const T y = clamp_coord(cy[p], T(h - 1));
    if (valid) valid[p] = (x == cx[p] && y == cy[p]);
    const int bx = static_cast<int>(std::floor(x)), by = static_cast<int>(std::floor(y));
    for (int c = 0; c < channels; ++c) {
      T acc = 0;
      for (int j = by - 1; j <= by + 2; ++j)
        for (int i = bx - 1; i <= bx + 2; ++i) {
          const T wgt = tent(x - T(i)) * tent(y - T(j));
          if (wgt == T(0)) continue;
          acc += wgt * src[(static_cast<std::size_t>(c) * h + std::clamp(j, 0, h - 1)) * w +
                           std::clamp(i, 0, w - 1)];
        }
      out[static_cast<std::size_t>(c) * count + p] = acc;
    }
  }
}

template <typename T>
void bilinear_backward(const T* src, int channels, int h, int w, const T* cx, const T* cy,
                       int count, const T* grad_out, T* grad_src, T* grad_cx, T* grad_cy) {
  for (int p = 0; p < count; ++p) {
    const T x = clamp_coord(cx[p], T(w - 1));
    const T y = clamp_coord(cy[p], T(h - 1));
    const int bx = static_cast<int>(std::floor(x)), by = static_cast<int>(std::floor(y));
    T gx = 0, gy = 0;
    for (int c = 0; c < channels; ++c) {
      const T g = grad_out[static_cast<std::size_t>(c) * count + p];
      for (int j = by - 1; j <= by + 2; ++j)
        for (int i = bx - 1; i <= bx + 2; ++i) {
          const std::size_t idx = (static_cast<std::size_t>(c) * h + std::clamp(j, 0, h - 1)) * w +
                                  std::clamp(i, 0, w - 1);
          const T kx = tent(x - T(i)), ky = tent(y - T(j));
          gx += g * tent_slope(x - T(i)) * ky * src[idx];
          gy += g * kx * tent_slope(y - T(j)) * src[idx];
          if (grad_src) grad_src[idx] += g * kx * ky;
        }
    }
    if (grad_cx) grad_cx[p] = (x == cx[p]) ? gx : T(0);
    if (grad_cy) grad_cy[p] = (y == cy[p]) ? gy : T(0);
  }
}

}  // namespace reference

}  // namespace lfedit::kernels
