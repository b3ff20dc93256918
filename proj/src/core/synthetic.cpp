// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lfedit/errors.hpp"

namespace lfedit::synthetic {

Texture::Texture(std::uint64_t seed, int components, double min_freq, double max_freq) {
  require(components >= 1 && min_freq > 0 && max_freq >= min_freq, "Texture: bad parameters");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> freq(min_freq, max_freq);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  for (auto& waves : waves_) {
    double total = 0.0;
    for (int k = 0; k < components; ++k) {
      const double a = angle(rng), f = freq(rng);
      waves.push_back({amp(rng), f * std::cos(a), f * std::sin(a), phase(rng)});
      total += waves.back().amplitude;
    }
    for (auto& w : waves) w.amplitude *= 0.45 / total;
  }
}

float Texture::operator()(int channel, double x, double y) const {
  double v = 0.5;
  for (const auto& w : waves_[channel]) v += w.amplitude * std::sin(w.fx * x + w.fy * y + w.phase);
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

LightField constant_disparity(GridShape grid, int height, int width, double d, std::uint64_t seed) {
  require(height >= 1 && width >= 1, "constant_disparity: empty views");
  const Texture tex(seed);
  const AngularIndex c = grid.center();
  Tensor views(grid.count(), 3, height, width);
  for (int i = 0; i < grid.count(); ++i) {
    const AngularIndex a = grid.at(i);
    const double ox = (a.u - c.u) * d, oy = (a.v - c.v) * d;
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) views(i, ch, y, x) = tex(ch, x - ox, y - oy);
  }
  return LightField(grid, std::move(views));
}

TwoPlaneScene two_plane(GridShape grid, int height, int width, double d_bg, double d_fg, int x0, int x1,
                        std::uint64_t seed) {
  require(x0 < x1, "two_plane: empty foreground stripe");
  const Texture background(seed);
  const Texture foreground(seed ^ 0x5DEECE66DULL, 4, 0.3, 0.9);
  const AngularIndex c = grid.center();
  TwoPlaneScene s;
  s.background_disparity = d_bg;
  s.foreground_disparity = d_fg;
  Tensor views(grid.count(), 3, height, width);
  s.disparity = Tensor(grid.count(), 2, height, width);
  s.band = Tensor(grid.count(), 1, height, width);
  auto in_stripe = [&](double xc) { return xc >= x0 && xc < x1; };
  for (int i = 0; i < grid.count(); ++i) {
    const AngularIndex a = grid.at(i);
    const double du = a.u - c.u, dv = a.v - c.v;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double xf = x - du * d_fg;
        const bool fg = in_stripe(xf);
        const double d = fg ? d_fg : d_bg;
        const Texture& tex = fg ? foreground : background;
        for (int ch = 0; ch < 3; ++ch) views(i, ch, y, x) = tex(ch, x - du * d, y - dv * d);
        s.disparity(i, 0, y, x) = static_cast<float>(d);
        s.disparity(i, 1, y, x) = static_cast<float>(d);
        // Background visible here but its central-view position is covered.
        s.band(i, 0, y, x) = !fg && in_stripe(x - du * d_bg) ? 1.0f : 0.0f;
      }
  }
  s.lightfield = LightField(grid, std::move(views));
  return s;
}

}  // namespace lfedit::synthetic
