// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/errors.hpp"
#include "lfedit/kernels/conv.hpp"

namespace lfedit::kernels::reference {

void conv2d_forward(const Tensor& input, const Tensor& weight, std::span<const float> bias,
                    Tensor& output) {
  require(weight.channels() == input.channels(), "conv2d: channel mismatch");
  const int n = input.batch(), ci = input.channels(), h = input.height(), w = input.width();
  const int co = weight.batch(), k = weight.height(), pad = k / 2;
  output = Tensor(n, co, h, w);
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < co; ++o)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (int i = 0; i < ci; ++i)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int sy = y + ky - pad, sx = x + kx - pad;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                acc += double(weight(o, i, ky, kx)) * input(b, i, sy, sx);
              }
          output(b, o, y, x) = static_cast<float>(acc);
        }
}

void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                     Tensor* grad_input, Tensor* grad_weight, std::span<float> grad_bias) {
  const int n = input.batch(), ci = input.channels(), h = input.height(), w = input.width();
  const int co = weight.batch(), k = weight.height(), pad = k / 2;
  if (grad_input) *grad_input = Tensor(n, ci, h, w);
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < co; ++o)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const float g = grad_output(b, o, y, x);
          if (!grad_bias.empty()) grad_bias[o] += g;
          for (int i = 0; i < ci; ++i)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int sy = y + ky - pad, sx = x + kx - pad;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                if (grad_weight) (*grad_weight)(o, i, ky, kx) += g * input(b, i, sy, sx);
                if (grad_input) (*grad_input)(b, i, sy, sx) += g * weight(o, i, ky, kx);
              }
        }
}

}  // namespace lfedit::kernels::reference
