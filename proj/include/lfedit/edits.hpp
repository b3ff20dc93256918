// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <random>
#include <string>

#include "lfedit/lightfield.hpp"

// Global per-pixel colour edits G used to build {G(I_c), G(L)} training pairs.

namespace lfedit {

enum class EditKind { kHue, kSaturation, kExposure, kContrast };

std::string to_string(EditKind kind);
EditKind edit_kind_from_string(const std::string& name);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct EditRanges {
  Range hue_degrees{-30.0, 30.0};
  Range saturation{0.5, 1.5};
  Range exposure{0.8, 1.25};
  Range contrast{0.7, 1.3};
};

/// hue:        rotation of the YIQ chroma plane by `parameter` degrees
///             (Rec.601 luma is left unchanged before clamping)
/// saturation: Y + s (rgb - Y)
/// exposure:   g * v
/// contrast:   0.5 + c (v - 0.5)
/// Results are clamped to [0,1].
struct EditOperator {
  EditKind kind = EditKind::kExposure;
  double parameter = 1.0;

  static EditOperator identity(EditKind kind);
  bool is_identity() const;

  /// Applies to every [*,3,H,W] sample of `images`.
  Tensor apply(const Tensor& images) const;
  LightField apply(const LightField& lf) const;
};

/// Kind uniform over the four, parameter uniform over its range.
EditOperator sample_edit(const EditRanges& ranges, std::mt19937_64& rng);

struct EditPair {
  VisualChannels visual;            // G(I_c)
  LightField target;                // G(L)
  std::optional<EditOperator> edit; // empty when the pair is unedited
};

/// With probability `edit_probability` draws one operator and applies it to
/// the central view and every view; otherwise returns the unedited pair.
EditPair sample_edit_pair(const LightField& patch, double edit_probability, const EditRanges& ranges,
                          std::mt19937_64& rng);

/// Rec.601 luma.
inline float luma601(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

}  // namespace lfedit
