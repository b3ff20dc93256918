// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lfedit/errors.hpp"
#include "lfedit/kernels/conv.hpp"
#include "lfedit/objective_ops.hpp"

namespace lfedit::autograd {
namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

// Wraps an op result, recording the graph edge only when some input needs a
// gradient and recording is enabled.
Variable record(Tensor value, std::vector<NodePtr> parents,
                std::function<void(const Tensor&)> backward_fn) {
  Variable out(std::move(value));
  const bool needs = g_grad_enabled &&
                     std::any_of(parents.begin(), parents.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
  if (needs) {
    Node& n = *out.node();
    n.requires_grad = true;
    n.parents = std::move(parents);
    n.backward = std::move(backward_fn);
  }
  return out;
}

void accumulate(Node& node, const Tensor& delta) {
  if (!node.requires_grad) return;
  Tensor& g = node.grad_buffer();
  float* pg = g.data();
  const float* pd = delta.data();
  for (std::size_t i = 0; i < g.size(); ++i) pg[i] += pd[i];
}

Tensor scalar(float v) { return Tensor(1, 1, 1, 1, v); }

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.empty()) grad = Tensor(value.batch(), value.channels(), value.height(), value.width());
  return grad;
}

Variable::Variable(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Variable& root) {
  require(root.value().size() == 1, "backward: root must be a scalar");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order. The order list owns
  // its nodes so clearing parent links during the sweep frees nothing early.
  std::vector<NodePtr> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<NodePtr, std::size_t>> stack{{root.node(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodePtr p = node->parents[next++];
      if (p->requires_grad && p->backward && seen.insert(p.get()).second) stack.push_back({std::move(p), 0});
      continue;
    }
    order.push_back(std::move(node));
    stack.pop_back();
  }

  root.node()->grad_buffer().data()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = it->get();
    if (n->backward && !n->grad.empty()) n->backward(n->grad);
    n->backward = nullptr;
    n->parents.clear();
    if (n != root.node().get()) n->grad = Tensor();
  }
}

Variable conv2d(const Variable& x, const Variable& weight, const Variable& bias) {
  Tensor out;
  kernels::parallel::conv2d_forward(x.value(), weight.value(), bias.value().values(), out);
  NodePtr nx = x.node(), nw = weight.node(), nb = bias.node();
  return record(std::move(out), {nx, nw, nb}, [nx, nw, nb](const Tensor& g) {
    Tensor gin;
    Tensor* gw = nw->requires_grad ? &nw->grad_buffer() : nullptr;
    std::span<float> gb = nb->requires_grad ? nb->grad_buffer().values() : std::span<float>{};
    kernels::parallel::conv2d_backward(nx->value, nw->value, g, nx->requires_grad ? &gin : nullptr,
                                       gw, gb);
    if (nx->requires_grad) accumulate(*nx, gin);
  });
}

Variable leaky_relu(const Variable& x, float slope) {
  Tensor out = x.value();
  for (float& v : out.values()) v = v > 0.0f ? v : v * slope;
  NodePtr nx = x.node();
  return record(std::move(out), {nx}, [nx, slope](const Tensor& g) {
    Tensor& gx = nx->grad_buffer();
    const float* v = nx->value.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] += v[i] > 0.0f ? g.data()[i] : slope * g.data()[i];
  });
}

Variable scaled_tanh(const Variable& x, float scale) {
  Tensor out = x.value();
  for (float& v : out.values()) v = scale * std::tanh(v);
  NodePtr nx = x.node();
  Tensor y = out;
  return record(std::move(out), {nx}, [nx, y = std::move(y), scale](const Tensor& g) {
    Tensor& gx = nx->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const float t = y.data()[i] / scale;
      gx.data()[i] += g.data()[i] * scale * (1.0f - t * t);
    }
  });
}

Variable add(const Variable& a, const Variable& b) {
  require(a.value().same_shape(b.value()), "add: shape mismatch");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.value().data()[i];
  NodePtr na = a.node(), nb = b.node();
  return record(std::move(out), {na, nb}, [na, nb](const Tensor& g) {
    accumulate(*na, g);
    accumulate(*nb, g);
  });
}

Variable add_clamp_unit(const Variable& a, const Variable& b) {
  require(a.value().same_shape(b.value()), "add_clamp_unit: shape mismatch");
  Tensor sum = a.value();
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += b.value().data()[i];
  Tensor out = sum;
  for (float& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  NodePtr na = a.node(), nb = b.node();
  return record(std::move(out), {na, nb}, [na, nb, sum = std::move(sum)](const Tensor& g) {
    Tensor masked = g;
    for (std::size_t i = 0; i < masked.size(); ++i) {
      const float s = sum.data()[i];
      if (s < 0.0f || s > 1.0f) masked.data()[i] = 0.0f;
    }
    accumulate(*na, masked);
    accumulate(*nb, masked);
  });
}

Variable concat_channels(const std::vector<Variable>& parts) {
  require(!parts.empty(), "concat_channels: nothing to concatenate");
  const Tensor& first = parts.front().value();
  int channels = 0;
  for (const auto& p : parts) {
    require(p.value().batch() == first.batch() && p.value().height() == first.height() &&
                p.value().width() == first.width(),
            "concat_channels: shape mismatch");
    channels += p.value().channels();
  }
  Tensor out(first.batch(), channels, first.height(), first.width());
  const std::size_t plane = first.plane_size();
  std::vector<NodePtr> nodes;
  for (int n = 0; n < first.batch(); ++n) {
    int c0 = 0;
    for (const auto& p : parts) {
      std::copy_n(p.value().plane(n, 0), p.value().channels() * plane, out.plane(n, c0));
      c0 += p.value().channels();
    }
  }
  for (const auto& p : parts) nodes.push_back(p.node());
  return record(std::move(out), nodes, [nodes, plane](const Tensor& g) {
    int c0 = 0;
    for (const auto& node : nodes) {
      const int c = node->value.channels();
      if (node->requires_grad) {
        Tensor& gp = node->grad_buffer();
        for (int n = 0; n < g.batch(); ++n) {
          const float* src = g.plane(n, c0);
          float* dst = gp.plane(n, 0);
          for (std::size_t i = 0; i < c * plane; ++i) dst[i] += src[i];
        }
      }
      c0 += c;
    }
  });
}

Variable avg_pool2(const Variable& x) {
  const Tensor& in = x.value();
  const int oh = in.height() / 2, ow = in.width() / 2;
  require(oh >= 1 && ow >= 1, "avg_pool2: input too small");
  Tensor out(in.batch(), in.channels(), oh, ow);
  for (int n = 0; n < in.batch(); ++n)
    for (int c = 0; c < in.channels(); ++c)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx)
          out(n, c, y, xx) = 0.25f * (in(n, c, 2 * y, 2 * xx) + in(n, c, 2 * y, 2 * xx + 1) +
                                      in(n, c, 2 * y + 1, 2 * xx) + in(n, c, 2 * y + 1, 2 * xx + 1));
  NodePtr nx = x.node();
  return record(std::move(out), {nx}, [nx, oh, ow](const Tensor& g) {
    Tensor& gx = nx->grad_buffer();
    for (int n = 0; n < g.batch(); ++n)
      for (int c = 0; c < g.channels(); ++c)
        for (int y = 0; y < oh; ++y)
          for (int xx = 0; xx < ow; ++xx) {
            const float v = 0.25f * g(n, c, y, xx);
            gx(n, c, 2 * y, 2 * xx) += v;
            gx(n, c, 2 * y, 2 * xx + 1) += v;
            gx(n, c, 2 * y + 1, 2 * xx) += v;
            gx(n, c, 2 * y + 1, 2 * xx + 1) += v;
          }
  });
}

Variable upsample2_to(const Variable& x, int height, int width) {
  const Tensor& in = x.value();
  Tensor out(in.batch(), in.channels(), height, width);
  for (int n = 0; n < in.batch(); ++n)
    for (int c = 0; c < in.channels(); ++c)
      for (int y = 0; y < height; ++y) {
        const int sy = std::min(y / 2, in.height() - 1);
        for (int xx = 0; xx < width; ++xx) out(n, c, y, xx) = in(n, c, sy, std::min(xx / 2, in.width() - 1));
      }
  NodePtr nx = x.node();
  return record(std::move(out), {nx}, [nx](const Tensor& g) {
    Tensor& gx = nx->grad_buffer();
    for (int n = 0; n < g.batch(); ++n)
      for (int c = 0; c < g.channels(); ++c)
        for (int y = 0; y < g.height(); ++y) {
          const int sy = std::min(y / 2, gx.height() - 1);
          for (int xx = 0; xx < g.width(); ++xx) gx(n, c, sy, std::min(xx / 2, gx.width() - 1)) += g(n, c, y, xx);
        }
  });
}

Variable reshape(const Variable& x, int n, int c, int h, int w) {
  require(static_cast<std::size_t>(n) * c * h * w == x.value().size(), "reshape: element count mismatch");
  NodePtr nx = x.node();
  return record(x.value().reshaped(n, c, h, w), {nx}, [nx](const Tensor& g) {
    const auto s = nx->value.shape();
    accumulate(*nx, g.reshaped(s[0], s[1], s[2], s[3]));
  });
}

Variable select_batch(const Variable& x, int index) {
  require(index >= 0 && index < x.value().batch(), "select_batch: index out of range");
  NodePtr nx = x.node();
  return record(x.value().slice_batch(index, 1), {nx}, [nx, index](const Tensor& g) {
    Tensor& gx = nx->grad_buffer();
    float* dst = gx.data() + static_cast<std::size_t>(index) * gx.sample_size();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g.data()[i];
  });
}

Variable gather_batch(const Variable& x, std::span<const int> indices) {
  const Tensor& in = x.value();
  const std::size_t sample = in.sample_size();
  Tensor out(static_cast<int>(indices.size()), in.channels(), in.height(), in.width());
  for (std::size_t b = 0; b < indices.size(); ++b) {
    require(indices[b] >= 0 && indices[b] < in.batch(), "gather_batch: index out of range");
    std::copy_n(in.data() + static_cast<std::size_t>(indices[b]) * sample, sample, out.data() + b * sample);
  }
  NodePtr nx = x.node();
  std::vector<int> ids(indices.begin(), indices.end());
  return record(std::move(out), {nx}, [nx, ids, sample](const Tensor& g) {
    float* gx = nx->grad_buffer().data();
    for (std::size_t b = 0; b < ids.size(); ++b) {
      float* dst = gx + static_cast<std::size_t>(ids[b]) * sample;
      const float* src = g.data() + b * sample;
      for (std::size_t i = 0; i < sample; ++i) dst[i] += src[i];
    }
  });
}

Variable project_views(const Variable& trunk, const Variable& weight, const Variable& bias,
                       std::span<const int> views, int channels_per_view) {
  const Tensor& t = trunk.value();
  const Tensor& w = weight.value();
  require(t.batch() == 1, "project_views: trunk must have batch 1");
  require(w.channels() == t.channels() && w.height() == 1 && w.width() == 1,
          "project_views: weight must be [V*C, S, 1, 1]");
  const int c = channels_per_view, s = t.channels();
  const int b = static_cast<int>(views.size());
  for (int v : views) require(v >= 0 && (v + 1) * c <= w.batch(), "project_views: view index out of range");

  Tensor out(b, c, t.height(), t.width());
  std::vector<int> ids(views.begin(), views.end());
  for (int i = 0; i < b; ++i) {
    Tensor wv = w.slice_batch(ids[i] * c, c);
    Tensor row;
    kernels::parallel::conv2d_forward(t, wv, std::span<const float>(bias.value().data() + ids[i] * c, c), row);
    std::copy_n(row.data(), row.size(), out.data() + static_cast<std::size_t>(i) * row.size());
  }
  NodePtr nt = trunk.node(), nw = weight.node(), nb = bias.node();
  return record(std::move(out), {nt, nw, nb}, [nt, nw, nb, ids, c, s](const Tensor& g) {
    Tensor gt_total;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Tensor wv = nw->value.slice_batch(ids[i] * c, c);
      Tensor gw(c, s, 1, 1);
      std::vector<float> gb(c, 0.0f);
      Tensor gt;
      kernels::parallel::conv2d_backward(nt->value, wv, g.slice_batch(static_cast<int>(i), 1),
                                         nt->requires_grad ? &gt : nullptr, &gw, gb);
      if (nw->requires_grad) {
        float* dst = nw->grad_buffer().data() + static_cast<std::size_t>(ids[i]) * c * s;
        for (std::size_t k = 0; k < gw.size(); ++k) dst[k] += gw.data()[k];
      }
      if (nb->requires_grad) {
        float* dst = nb->grad_buffer().data() + static_cast<std::size_t>(ids[i]) * c;
        for (int k = 0; k < c; ++k) dst[k] += gb[k];
      }
      if (nt->requires_grad) accumulate(*nt, gt);
    }
  });
}

Variable warp(const Variable& source, const Variable& disparity, std::span<const AngularOffset> deltas) {
  const Tensor& src = source.value();
  const Tensor& d = disparity.value();
  require(src.batch() == 1, "warp: source must have batch 1");
  require(d.channels() == 2 && d.height() == src.height() && d.width() == src.width(),
          "warp: disparity " + shape_string(d.shape()) + " not aligned with source " + shape_string(src.shape()));
  require(static_cast<int>(deltas.size()) == d.batch(), "warp: one angular offset per disparity map");
  const int h = src.height(), w = src.width(), c = src.channels();
  Tensor out(d.batch(), c, h, w);
  for (int b = 0; b < d.batch(); ++b)
    geometry_ops::warp_forward(src.data(), c, h, w, d.plane(b, 0), deltas[b], out.plane(b, 0), nullptr);
  NodePtr ns = source.node(), nd = disparity.node();
  std::vector<AngularOffset> offs(deltas.begin(), deltas.end());
  return record(std::move(out), {ns, nd}, [ns, nd, offs, h, w, c](const Tensor& g) {
    float* gsrc = ns->requires_grad ? ns->grad_buffer().data() : nullptr;
    for (std::size_t b = 0; b < offs.size(); ++b) {
      float* gd = nd->requires_grad ? nd->grad_buffer().plane(static_cast<int>(b), 0) : nullptr;
      geometry_ops::warp_backward(ns->value.data(), c, h, w, nd->value.plane(static_cast<int>(b), 0),
                                  offs[b], g.plane(static_cast<int>(b), 0), gsrc, gd);
    }
  });
}

Variable consistency(const Variable& disp_i, const Variable& disp_j, std::span<const AngularOffset> deltas) {
  const Tensor& di = disp_i.value();
  const Tensor& dj = disp_j.value();
  require(di.channels() == 2 && dj.channels() == 2 && di.height() == dj.height() && di.width() == dj.width(),
          "consistency: disparity maps are not aligned");
  require(dj.batch() == 1 || dj.batch() == di.batch(), "consistency: D_j batch must be 1 or match D_i");
  require(static_cast<int>(deltas.size()) == di.batch(), "consistency: one angular offset per map");
  const int h = di.height(), w = di.width();
  const bool shared = dj.batch() == 1;
  Tensor out(di.batch(), 1, h, w);
  for (int b = 0; b < di.batch(); ++b)
    geometry_ops::consistency_forward(di.plane(b, 0), dj.plane(shared ? 0 : b, 0), h, w, deltas[b],
                                      out.plane(b, 0));
  NodePtr ni = disp_i.node(), nj = disp_j.node();
  std::vector<AngularOffset> offs(deltas.begin(), deltas.end());
  return record(std::move(out), {ni, nj}, [ni, nj, offs, h, w, shared](const Tensor& g) {
    for (std::size_t b = 0; b < offs.size(); ++b) {
      const int bi = static_cast<int>(b), bj = shared ? 0 : bi;
      float* gi = ni->requires_grad ? ni->grad_buffer().plane(bi, 0) : nullptr;
      float* gj = nj->requires_grad ? nj->grad_buffer().plane(bj, 0) : nullptr;
      geometry_ops::consistency_backward(ni->value.plane(bi, 0), nj->value.plane(bj, 0), h, w, offs[b],
                                         g.plane(bi, 0), gi, gj);
    }
  });
}

Variable l1_mean(const Variable& x, const Tensor& target) {
  const float v = objective_ops::l1_mean(x.value(), target);
  NodePtr nx = x.node();
  return record(scalar(v), {nx}, [nx, target](const Tensor& g) {
    objective_ops::l1_mean(nx->value, target, &nx->grad_buffer(), g.data()[0]);
  });
}

Variable ssim_mean(const Variable& x, const Tensor& target, int window, double sigma) {
  const float v = objective_ops::ssim_mean(x.value(), target, static_cast<Tensor*>(nullptr), 1.0f, window, sigma);
  NodePtr nx = x.node();
  return record(scalar(v), {nx}, [nx, target, window, sigma](const Tensor& g) {
    objective_ops::ssim_mean(nx->value, target, &nx->grad_buffer(), g.data()[0], window, sigma);
  });
}

Variable mean(const Variable& x) {
  double total = 0.0;
  for (float v : x.value().values()) total += v;
  const std::size_t n = x.value().size();
  NodePtr nx = x.node();
  return record(scalar(static_cast<float>(total / n)), {nx}, [nx, n](const Tensor& g) {
    const float s = g.data()[0] / static_cast<float>(n);
    for (float& v : nx->grad_buffer().values()) v += s;
  });
}

Variable weighted_sum(const std::vector<Variable>& terms, const std::vector<float>& weights) {
  require(terms.size() == weights.size(), "weighted_sum: size mismatch");
  double total = 0.0;
  std::vector<NodePtr> nodes;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(terms[i].value().size() == 1, "weighted_sum: terms must be scalars");
    total += double(weights[i]) * terms[i].item();
    nodes.push_back(terms[i].node());
  }
  return record(scalar(static_cast<float>(total)), nodes, [nodes, weights](const Tensor& g) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i]->requires_grad) nodes[i]->grad_buffer().data()[0] += weights[i] * g.data()[0];
  });
}

}  // namespace lfedit::autograd
