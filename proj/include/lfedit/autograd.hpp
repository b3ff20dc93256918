// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lfedit/geometry_ops.hpp"
#include "lfedit/tensor.hpp"

// Minimal reverse-mode differentiation over Tensor values. Every op returns a
// Variable whose node remembers its inputs and a closure that pushes the
// node's gradient back into them. Graphs are released by backward().

namespace lfedit::autograd {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Tensor& grad)> backward;

  /// Gradient buffer, zero-initialized on first use.
  Tensor& grad_buffer();
};

class Variable {
 public:
  Variable() = default;
  explicit Variable(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->grad = Tensor(); }
  bool defined() const { return static_cast<bool>(node_); }
  float item() const { return node_->value.data()[0]; }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Seeds d(root)/d(root) = 1 for a single-element root and propagates to
/// every reachable node that requires a gradient.
void backward(const Variable& root);

bool grad_enabled();

/// Disables graph recording in its scope (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---- ops -------------------------------------------------------------------

Variable conv2d(const Variable& x, const Variable& weight, const Variable& bias);
Variable leaky_relu(const Variable& x, float slope);
/// scale * tanh(x)
Variable scaled_tanh(const Variable& x, float scale);
Variable add(const Variable& a, const Variable& b);
/// clamp(a + b, 0, 1); the gradient passes where the sum lies in [0,1].
Variable add_clamp_unit(const Variable& a, const Variable& b);
Variable concat_channels(const std::vector<Variable>& parts);
/// 2x2 average pooling; odd trailing rows/columns are dropped.
Variable avg_pool2(const Variable& x);
/// Nearest-neighbour upsampling to an explicit size (src index = dst / 2).
Variable upsample2_to(const Variable& x, int height, int width);
Variable reshape(const Variable& x, int n, int c, int h, int w);
Variable select_batch(const Variable& x, int index);
/// Stacks x[indices[0]], x[indices[1]], ... along the batch axis.
Variable gather_batch(const Variable& x, std::span<const int> indices);

/// Per-view 1x1 projection. `trunk` is [1,S,H,W]; `weight` is
/// [V*C, S, 1, 1] and `bias` [V*C, 1, 1, 1]. Returns [len(views), C, H, W]
/// holding rows [v*C, (v+1)*C) for each requested view v.
Variable project_views(const Variable& trunk, const Variable& weight, const Variable& bias,
                       std::span<const int> views, int channels_per_view);

/// Warps a single [1,C,H,W] source by each [b,2,H,W] disparity map with
/// angular offset deltas[b]: out[b](x) = src(x + deltas[b] (.) D_b(x)).
Variable warp(const Variable& source, const Variable& disparity,
              std::span<const AngularOffset> deltas);

/// out[b](x) = || D_i[b](x) - D_j(x + deltas[b] (.) D_i[b](x)) ||_1, where
/// D_j is either a single map shared by all b or one map per b.
Variable consistency(const Variable& disp_i, const Variable& disp_j,
                     std::span<const AngularOffset> deltas);

/// Mean absolute difference against a constant target.
Variable l1_mean(const Variable& x, const Tensor& target);
/// Mean SSIM over batch and channels against a constant target.
Variable ssim_mean(const Variable& x, const Tensor& target, int window = 11, double sigma = 1.5);
Variable mean(const Variable& x);
/// sum_i weights[i] * terms[i] for scalar terms.
Variable weighted_sum(const std::vector<Variable>& terms, const std::vector<float>& weights);

}  // namespace lfedit::autograd
