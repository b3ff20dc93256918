// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/edits.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lfedit/errors.hpp"

namespace lfedit {
namespace {

// RGB -> YIQ (FCC); the inverse is computed exactly so a pure chroma
// rotation leaves Y untouched.
const Eigen::Matrix3d& rgb_to_yiq() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.299, 0.587, 0.114,  //
                                    0.595716, -0.274453, -0.321263,            //
                                    0.211456, -0.522591, 0.311135)
                                       .finished();
  return m;
}

const Eigen::Matrix3d& yiq_to_rgb() {
  static const Eigen::Matrix3d m = rgb_to_yiq().inverse();
  return m;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

std::string to_string(EditKind kind) {
  switch (kind) {
    case EditKind::kHue: return "hue";
    case EditKind::kSaturation: return "saturation";
    case EditKind::kExposure: return "exposure";
    case EditKind::kContrast: return "contrast";
  }
  return "unknown";
}

EditKind edit_kind_from_string(const std::string& name) {
  if (name == "hue") return EditKind::kHue;
  if (name == "saturation") return EditKind::kSaturation;
  if (name == "exposure") return EditKind::kExposure;
  if (name == "contrast") return EditKind::kContrast;
  throw ContractError("unknown edit kind '" + name + "' (hue|saturation|exposure|contrast)");
}

EditOperator EditOperator::identity(EditKind kind) { return {kind, kind == EditKind::kHue ? 0.0 : 1.0}; }

bool EditOperator::is_identity() const { return parameter == identity(kind).parameter; }

Tensor EditOperator::apply(const Tensor& images) const {
  require(images.channels() == 3, "edit: expected RGB images, got " + shape_string(images.shape()));
  if (is_identity()) return images;
  Tensor out = images;
  const std::size_t plane = images.plane_size();
  Eigen::Matrix3d hue_matrix = Eigen::Matrix3d::Identity();
  if (kind == EditKind::kHue) {
    const double t = parameter * std::numbers::pi / 180.0;
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    rot(1, 1) = std::cos(t), rot(1, 2) = -std::sin(t);
    rot(2, 1) = std::sin(t), rot(2, 2) = std::cos(t);
    hue_matrix = yiq_to_rgb() * rot * rgb_to_yiq();
  }
  for (int n = 0; n < images.batch(); ++n) {
    float* r = out.plane(n, 0);
    float* g = out.plane(n, 1);
    float* b = out.plane(n, 2);
    for (std::size_t p = 0; p < plane; ++p) {
      const Eigen::Vector3d rgb(r[p], g[p], b[p]);
      Eigen::Vector3d res = rgb;
      switch (kind) {
        case EditKind::kHue: res = hue_matrix * rgb; break;
        case EditKind::kSaturation: {
          const double y = rgb_to_yiq().row(0).dot(rgb);
          res = Eigen::Vector3d::Constant(y) + parameter * (rgb - Eigen::Vector3d::Constant(y));
          break;
        }
        case EditKind::kExposure: res = parameter * rgb; break;
        case EditKind::kContrast:
          res = Eigen::Vector3d::Constant(0.5) + parameter * (rgb - Eigen::Vector3d::Constant(0.5));
          break;
      }
      r[p] = clamp01(res[0]), g[p] = clamp01(res[1]), b[p] = clamp01(res[2]);
    }
  }
  return out;
}

LightField EditOperator::apply(const LightField& lf) const { return LightField(lf.grid(), apply(lf.views())); }

EditOperator sample_edit(const EditRanges& ranges, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  const EditKind kind = static_cast<EditKind>(pick(rng));
  Range r;
  switch (kind) {
    case EditKind::kHue: r = ranges.hue_degrees; break;
    case EditKind::kSaturation: r = ranges.saturation; break;
    case EditKind::kExposure: r = ranges.exposure; break;
    case EditKind::kContrast: r = ranges.contrast; break;
  }
  std::uniform_real_distribution<double> param(r.lo, r.hi);
  return {kind, param(rng)};
}

EditPair sample_edit_pair(const LightField& patch, double edit_probability, const EditRanges& ranges,
                          std::mt19937_64& rng) {
  require(edit_probability >= 0.0 && edit_probability <= 1.0, "edit_probability must lie in [0,1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) >= edit_probability) return {VisualChannels(patch.central_view()), patch, std::nullopt};
  const EditOperator op = sample_edit(ranges, rng);
  LightField target = op.apply(patch);
  VisualChannels visual(target.central_view());
  return {std::move(visual), std::move(target), op};
}

}  // namespace lfedit
