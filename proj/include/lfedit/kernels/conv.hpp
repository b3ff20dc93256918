// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "lfedit/tensor.hpp"

// Stride-1, zero-padded ("same") 2D convolution with an odd square kernel.
// Weights are laid out [out_channels, in_channels, k, k]; bias has
// out_channels entries.
//
// `parallel` lowers each row tile to im2col + GEMM with OpenMP over the
// column build. `reference` is the direct seven-loop form kept as the test
// oracle and benchmark baseline.

namespace lfedit::kernels {

namespace parallel {

void conv2d_forward(const Tensor& input, const Tensor& weight, std::span<const float> bias,
                    Tensor& output);

/// Accumulates into grad_weight / grad_bias; overwrites grad_input.
/// Any of the three outputs may be null / empty to skip it.
void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                     Tensor* grad_input, Tensor* grad_weight, std::span<float> grad_bias);

}  // namespace parallel

namespace reference {

void conv2d_forward(const Tensor& input, const Tensor& weight, std::span<const float> bias,
                    Tensor& output);

void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                     Tensor* grad_input, Tensor* grad_weight, std::span<float> grad_bias);

}  // namespace reference

}  // namespace lfedit::kernels
