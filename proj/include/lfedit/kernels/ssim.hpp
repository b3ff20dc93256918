// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

// Mean structural similarity of two single-channel planes on a unit value
// range, with a normalized Gaussian window evaluated at every position where
// it fits entirely inside the image. Optionally accumulates
// grad_scale * d(mean SSIM)/d(a) into grad_a.

namespace lfedit::kernels {

template <typename T>
std::vector<T> gaussian_taps(int size, double sigma) {
  std::vector<T> taps(size);
  double sum = 0.0;
  const double mid = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    const double v = std::exp(-((i - mid) * (i - mid)) / (2.0 * sigma * sigma));
    taps[i] = static_cast<T>(v);
    sum += v;
  }
  for (auto& t : taps) t = static_cast<T>(t / sum);
  return taps;
}

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Partial derivatives of the per-window SSIM value with respect to the local
// statistics of `a`, holding b's statistics fixed.
template <typename T>
struct SsimLocal {
  T value, d_mu_a, d_eaa, d_eab;
};

template <typename T>
inline SsimLocal<T> ssim_local(T mu_a, T mu_b, T e_aa, T e_bb, T e_ab) {
  const T c1 = static_cast<T>(kSsimC1), c2 = static_cast<T>(kSsimC2);
  const T var_a = e_aa - mu_a * mu_a, var_b = e_bb - mu_b * mu_b, cov = e_ab - mu_a * mu_b;
  const T a1 = 2 * mu_a * mu_b + c1, a2 = 2 * cov + c2;
  // Canonical operand order keeps the value symmetric under FMA contraction.
  const T lo = mu_a < mu_b ? mu_a : mu_b, hi = mu_a < mu_b ? mu_b : mu_a;
  const T b1 = lo * lo + hi * hi + c1, b2 = var_a + var_b + c2;
  const T s = (a1 * a2) / (b1 * b2);
  SsimLocal<T> out;
  out.value = s;
  out.d_mu_a = s * (2 * mu_b / a1 - 2 * mu_b / a2 - 2 * mu_a / b1 + 2 * mu_a / b2);
  out.d_eaa = -s / b2;
  out.d_eab = 2 * s / a2;
  return out;
}

namespace parallel {

namespace detail {

// Separable "valid" correlation: out is (h-k+1) x (w-k+1).
template <typename T>
void filter_valid(const T* in, int h, int w, const std::vector<T>& taps, T* tmp, T* out) {
  const int k = static_cast<int>(taps.size());
  const int oh = h - k + 1, ow = w - k + 1;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      T acc = 0;
      for (int t = 0; t < k; ++t) acc += taps[t] * in[y * w + x + t];
      tmp[y * ow + x] = acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) out[y * ow + x] = 0;
    for (int t = 0; t < k; ++t) {
      const T g = taps[t];
      const T* row = tmp + (y + t) * ow;
      for (int x = 0; x < ow; ++x) out[y * ow + x] += g * row[x];
    }
  }
}

// Adjoint of filter_valid: scatters an (oh x ow) map back to (h x w).
template <typename T>
void filter_adjoint(const T* in, int h, int w, const std::vector<T>& taps, T* tmp, T* out) {
  const int k = static_cast<int>(taps.size());
  const int oh = h - k + 1, ow = w - k + 1;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) tmp[y * ow + x] = 0;
    for (int t = 0; t < k; ++t) {
      const int sy = y - t;
      if (sy < 0 || sy >= oh) continue;
      const T g = taps[t];
      for (int x = 0; x < ow; ++x) tmp[y * ow + x] += g * in[sy * ow + x];
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T acc = 0;
      const int lo = std::max(0, x - ow + 1), hi = std::min(k - 1, x);
      for (int t = lo; t <= hi; ++t) acc += taps[t] * tmp[y * ow + x - t];
      out[y * w + x] = acc;
    }
  }
}

}  // namespace detail

template <typename T>
T ssim_plane(const T* a, const T* b, int h, int w, const std::vector<T>& taps, T* grad_a,
             T grad_scale) {
  const int k = static_cast<int>(taps.size());
  const int oh = h - k + 1, ow = w - k + 1;
  const std::size_t n = static_cast<std::size_t>(h) * w, m = static_cast<std::size_t>(oh) * ow;
  std::vector<T> sq(n), tmp(static_cast<std::size_t>(h) * ow);
  std::vector<T> mu_a(m), mu_b(m), e_aa(m), e_bb(m), e_ab(m);
  detail::filter_valid(a, h, w, taps, tmp.data(), mu_a.data());
  detail::filter_valid(b, h, w, taps, tmp.data(), mu_b.data());
  for (std::size_t i = 0; i < n; ++i) sq[i] = a[i] * a[i];
  detail::filter_valid(sq.data(), h, w, taps, tmp.data(), e_aa.data());
  for (std::size_t i = 0; i < n; ++i) sq[i] = b[i] * b[i];
  detail::filter_valid(sq.data(), h, w, taps, tmp.data(), e_bb.data());
  for (std::size_t i = 0; i < n; ++i) sq[i] = a[i] * b[i];
  detail::filter_valid(sq.data(), h, w, taps, tmp.data(), e_ab.data());

  T total = 0;
  std::vector<T> d_mu, d_aa, d_ab;
  if (grad_a) d_mu.resize(m), d_aa.resize(m), d_ab.resize(m);
  const T scale = grad_scale / static_cast<T>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const SsimLocal<T> l = ssim_local(mu_a[i], mu_b[i], e_aa[i], e_bb[i], e_ab[i]);
    total += l.value;
    if (grad_a) d_mu[i] = l.d_mu_a * scale, d_aa[i] = l.d_eaa * scale, d_ab[i] = l.d_eab * scale;
  }
  if (grad_a) {
    std::vector<T> g_mu(n), g_aa(n), g_ab(n);
    detail::filter_adjoint(d_mu.data(), h, w, taps, tmp.data(), g_mu.data());
    detail::filter_adjoint(d_aa.data(), h, w, taps, tmp.data(), g_aa.data());
    detail::filter_adjoint(d_ab.data(), h, w, taps, tmp.data(), g_ab.data());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) grad_a[i] += g_mu[i] + 2 * a[i] * g_aa[i] + b[i] * g_ab[i];
  }
  return total / static_cast<T>(m);
}

}  // namespace parallel

namespace reference {

// Direct 2D window sums, no separability.
template <typename T>
T ssim_plane(const T* a, const T* b, int h, int w, const std::vector<T>& taps, T* grad_a,
             T grad_scale) {
  const int k = static_cast<int>(taps.size());
  const int oh = h - k + 1, ow = w - k + 1;
  const T count = static_cast<T>(oh) * ow;
  T total = 0;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      T ma = 0, mb = 0, eaa = 0, ebb = 0, eab = 0;
      for (int ty = 0; ty < k; ++ty)
        for (int tx = 0; tx < k; ++tx) {
          const T g = taps[ty] * taps[tx];
          const T va = a[(y + ty) * w + x + tx], vb = b[(y + ty) * w + x + tx];
          ma += g * va, mb += g * vb, eaa += g * va * va, ebb += g * vb * vb, eab += g * va * vb;
        }
      const SsimLocal<T> l = ssim_local(ma, mb, eaa, ebb, eab);
      total += l.value;
      if (!grad_a) continue;
      for (int ty = 0; ty < k; ++ty)
        for (int tx = 0; tx < k; ++tx) {
          const std::size_t q = static_cast<std::size_t>(y + ty) * w + x + tx;
          const T g = taps[ty] * taps[tx] * grad_scale / count;
          grad_a[q] += g * (l.d_mu_a + 2 * a[q] * l.d_eaa + b[q] * l.d_eab);
        }
    }
  return total / count;
}

}  // namespace reference

}  // namespace lfedit::kernels
