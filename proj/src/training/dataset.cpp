// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <spdlog/spdlog.h>

#include <random>

#include "lfedit/epi.hpp"
#include "lfedit/errors.hpp"
#include "lfedit/training.hpp"

namespace lfedit {

std::string to_string(PatchTransform t) {
  switch (t) {
    case PatchTransform::kIdentity: return "identity";
    case PatchTransform::kFlipHorizontal: return "flip_horizontal";
    case PatchTransform::kRotate180: return "rotate180";
  }
  return "unknown";
}

LightField flip_horizontal(const LightField& lf) {
  const GridShape g = lf.grid();
  const int h = lf.height(), w = lf.width();
  Tensor out(g.count(), 3, h, w);
  for (int i = 0; i < g.count(); ++i) {
    const AngularIndex a = g.at(i);
    const int src = g.index({a.v, g.cols - 1 - a.u});
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(i, c, y, x) = lf.views()(src, c, y, w - 1 - x);
  }
  return LightField(g, std::move(out));
}

LightField rotate180(const LightField& lf) {
  const GridShape g = lf.grid();
  const int h = lf.height(), w = lf.width();
  Tensor out(g.count(), 3, h, w);
  for (int i = 0; i < g.count(); ++i) {
    const AngularIndex a = g.at(i);
    const int src = g.index({g.rows - 1 - a.v, g.cols - 1 - a.u});
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(i, c, y, x) = lf.views()(src, c, h - 1 - y, w - 1 - x);
  }
  return LightField(g, std::move(out));
}

LightField apply_transform(const LightField& lf, PatchTransform t) {
  switch (t) {
    case PatchTransform::kIdentity: return lf;
    case PatchTransform::kFlipHorizontal: return flip_horizontal(lf);
    case PatchTransform::kRotate180: return rotate180(lf);
  }
  return lf;
}

LightField crop(const LightField& lf, int y0, int x0, int height, int width) {
  require(y0 >= 0 && x0 >= 0 && height >= 1 && width >= 1 && y0 + height <= lf.height() &&
              x0 + width <= lf.width(),
          "crop window outside the light field");
  const GridShape g = lf.grid();
  Tensor out(g.count(), 3, height, width);
  for (int i = 0; i < g.count(); ++i)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < height; ++y)
        std::copy_n(&lf.views()(i, c, y0 + y, x0), width, &out(i, c, y, 0));
  return LightField(g, std::move(out));
}

std::vector<LightFieldPatch> prepare_dataset(const std::vector<LightField>& lfs, const TrainConfig& cfg) {
  require(cfg.patch_size >= 2 && cfg.patches_per_lf >= 1, "prepare_dataset: bad patch configuration");
  std::mt19937_64 rng(cfg.seed);
  std::vector<LightFieldPatch> out;
  std::size_t dropped = 0;
  for (std::size_t s = 0; s < lfs.size(); ++s) {
    const LightField& lf = lfs[s];
    if (lf.height() < cfg.patch_size || lf.width() < cfg.patch_size) {
      spdlog::warn("light field {} ({}x{}) is smaller than the {}px patch, skipped", s, lf.height(), lf.width(),
                   cfg.patch_size);
      continue;
    }
    std::uniform_int_distribution<int> ys(0, lf.height() - cfg.patch_size);
    std::uniform_int_distribution<int> xs(0, lf.width() - cfg.patch_size);
    std::uniform_int_distribution<int> ts(0, 2);
    for (int k = 0; k < cfg.patches_per_lf; ++k) {
      LightFieldPatch p;
      p.source = static_cast<int>(s);
      p.y0 = ys(rng);
      p.x0 = xs(rng);
      const int t = ts(rng);
      p.transform = cfg.augment ? static_cast<PatchTransform>(t) : PatchTransform::kIdentity;
      p.lf = apply_transform(crop(lf, p.y0, p.x0, cfg.patch_size, cfg.patch_size), p.transform);
      p.average_gradient = average_gradient(p.lf.central_view());
      if (p.average_gradient < cfg.texture_threshold) {
        ++dropped;
        continue;
      }
      out.push_back(std::move(p));
    }
  }
  spdlog::info("dataset: {} patches retained, {} textureless patches dropped", out.size(), dropped);
  return out;
}

nlohmann::json dataset_manifest(const std::vector<LightFieldPatch>& patches, const TrainConfig& cfg) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : patches)
    list.push_back({{"source", p.source},
                    {"y0", p.y0},
                    {"x0", p.x0},
                    {"size", p.lf.height()},
                    {"transform", to_string(p.transform)},
                    {"average_gradient", p.average_gradient}});
  return {{"seed", cfg.seed},
          {"patch_size", cfg.patch_size},
          {"patches_per_lf", cfg.patches_per_lf},
          {"texture_threshold", cfg.texture_threshold},
          {"augment", cfg.augment},
          {"patches", list}};
}

}  // namespace lfedit
