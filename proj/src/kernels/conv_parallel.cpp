// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "lfedit/errors.hpp"
#include "lfedit/kernels/conv.hpp"

namespace lfedit::kernels::parallel {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

// Upper bound on the im2col buffer, in floats.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

int rows_per_tile(int patch, int width, int height) {
  const std::size_t per_row = static_cast<std::size_t>(patch) * width;
  return std::clamp(static_cast<int>(kColumnBudget / std::max<std::size_t>(per_row, 1)), 1, height);
}

void check_shapes(const Tensor& input, const Tensor& weight) {
  require(weight.channels() == input.channels(),
          "conv2d: weight expects " + std::to_string(weight.channels()) + " input channels, got " +
              std::to_string(input.channels()));
  require(weight.height() == weight.width() && weight.height() % 2 == 1,
          "conv2d: kernel must be odd and square");
}

// cols[(ci*k + ky)*k + kx][(y - y0)*W + x] = input[ci][y + ky - p][x + kx - p]
void im2col(const float* sample, int channels, int height, int width, int k, int y0, int rows,
            float* cols) {
  const int pad = k / 2;
  const int patch = channels * k * k;
  const std::size_t tile = static_cast<std::size_t>(rows) * width;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < patch; ++r) {
    const int ci = r / (k * k);
    const int ky = (r / k) % k;
    const int kx = r % k;
    const float* plane = sample + static_cast<std::size_t>(ci) * height * width;
    float* dst = cols + r * tile;
    for (int ty = 0; ty < rows; ++ty) {
      const int sy = y0 + ty + ky - pad;
      float* row = dst + static_cast<std::size_t>(ty) * width;
      if (sy < 0 || sy >= height) {
        std::fill(row, row + width, 0.0f);
        continue;
      }
      const float* src = plane + static_cast<std::size_t>(sy) * width;
      const int dx = kx - pad;
      const int lo = std::min(width, std::max(0, -dx));
      const int hi = std::max(lo, std::min(width, width - dx));
      std::fill(row, row + lo, 0.0f);
      for (int x = lo; x < hi; ++x) row[x] = src[x + dx];
      std::fill(row + hi, row + width, 0.0f);
    }
  }
}

// Transpose of im2col: scatter-add columns back onto the input gradient.
void col2im(const float* cols, int channels, int height, int width, int k, int y0, int rows,
            float* grad_sample) {
  const int pad = k / 2;
  const std::size_t tile = static_cast<std::size_t>(rows) * width;
  // One thread per input channel keeps the accumulation race-free and in a
  // fixed order.
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < channels; ++ci) {
    float* plane = grad_sample + static_cast<std::size_t>(ci) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* src = cols + ((ci * k + ky) * k + kx) * tile;
        const int dx = kx - pad;
        const int lo = std::min(width, std::max(0, -dx));
        const int hi = std::max(lo, std::min(width, width - dx));
        for (int ty = 0; ty < rows; ++ty) {
          const int sy = y0 + ty + ky - pad;
          if (sy < 0 || sy >= height) continue;
          float* dst = plane + static_cast<std::size_t>(sy) * width;
          const float* row = src + static_cast<std::size_t>(ty) * width;
          for (int x = lo; x < hi; ++x) dst[x + dx] += row[x];
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward(const Tensor& input, const Tensor& weight, std::span<const float> bias,
                    Tensor& output) {
  check_shapes(input, weight);
  const int n = input.batch(), ci = input.channels(), h = input.height(), w = input.width();
  const int co = weight.batch(), k = weight.height();
  const int patch = ci * k * k;
  const std::size_t hw = input.plane_size();
  if (!(output.shape() == std::array{n, co, h, w})) output = Tensor(n, co, h, w);

  Eigen::Map<const RowMatrix> wmat(weight.data(), co, patch);
  const int tile_rows = k == 1 ? h : rows_per_tile(patch, w, h);
  AlignedVector<float> cols(k == 1 ? 0 : static_cast<std::size_t>(patch) * tile_rows * w);

  for (int b = 0; b < n; ++b) {
    const float* sample = input.plane(b, 0);
    for (int y0 = 0; y0 < h; y0 += tile_rows) {
      const int rows = std::min(tile_rows, h - y0);
      const long px = static_cast<long>(rows) * w;
      StridedMap out(output.plane(b, 0) + static_cast<std::size_t>(y0) * w, co, px,
                     Eigen::OuterStride<>(static_cast<long>(hw)));
      if (k == 1) {
        ConstStridedMap in(sample, ci, px, Eigen::OuterStride<>(static_cast<long>(hw)));
        out.noalias() = wmat * in;
      } else {
        im2col(sample, ci, h, w, k, y0, rows, cols.data());
        Eigen::Map<const RowMatrix> cmat(cols.data(), patch, px);
        out.noalias() = wmat * cmat;
      }
      if (!bias.empty()) {
        for (int o = 0; o < co; ++o) out.row(o).array() += bias[o];
      }
    }
  }
}

void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                     Tensor* grad_input, Tensor* grad_weight, std::span<float> grad_bias) {
  check_shapes(input, weight);
  const int n = input.batch(), ci = input.channels(), h = input.height(), w = input.width();
  const int co = weight.batch(), k = weight.height();
  const int patch = ci * k * k;
  const std::size_t hw = input.plane_size();
  require(grad_output.shape() == (std::array{n, co, h, w}), "conv2d_backward: grad shape");

  Eigen::Map<const RowMatrix> wmat(weight.data(), co, patch);
  if (grad_input) {
    if (!grad_input->same_shape(input)) *grad_input = Tensor(n, ci, h, w);
    grad_input->fill(0.0f);
  }
  if (grad_weight) require(grad_weight->same_shape(weight), "conv2d_backward: grad_weight shape");

  const int tile_rows = k == 1 ? h : rows_per_tile(patch, w, h);
  AlignedVector<float> cols(k == 1 ? 0 : static_cast<std::size_t>(patch) * tile_rows * w);
  AlignedVector<float> grad_cols(cols.size());

  for (int b = 0; b < n; ++b) {
    const float* sample = input.plane(b, 0);
    for (int y0 = 0; y0 < h; y0 += tile_rows) {
      const int rows = std::min(tile_rows, h - y0);
      const long px = static_cast<long>(rows) * w;
      ConstStridedMap gout(grad_output.plane(b, 0) + static_cast<std::size_t>(y0) * w, co, px,
                           Eigen::OuterStride<>(static_cast<long>(hw)));
      if (!grad_bias.empty()) {
        for (int o = 0; o < co; ++o) grad_bias[o] += gout.row(o).sum();
      }
      if (k == 1) {
        ConstStridedMap in(sample, ci, px, Eigen::OuterStride<>(static_cast<long>(hw)));
        if (grad_weight) {
          Eigen::Map<RowMatrix> gw(grad_weight->data(), co, patch);
          gw.noalias() += gout * in.transpose();
        }
        if (grad_input) {
          StridedMap gin(grad_input->plane(b, 0) + static_cast<std::size_t>(y0) * w, ci, px,
                         Eigen::OuterStride<>(static_cast<long>(hw)));
          gin.noalias() = wmat.transpose() * gout;
        }
        continue;
      }
      if (grad_weight) {
        im2col(sample, ci, h, w, k, y0, rows, cols.data());
        Eigen::Map<const RowMatrix> cmat(cols.data(), patch, px);
        Eigen::Map<RowMatrix> gw(grad_weight->data(), co, patch);
        gw.noalias() += gout * cmat.transpose();
      }
      if (grad_input) {
        Eigen::Map<RowMatrix> gcols(grad_cols.data(), patch, px);
        gcols.noalias() = wmat.transpose() * gout;
        col2im(grad_cols.data(), ci, h, w, k, y0, rows, grad_input->plane(b, 0));
      }
    }
  }
}

}  // namespace lfedit::kernels::parallel
