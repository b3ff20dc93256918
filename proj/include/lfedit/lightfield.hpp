// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <string>

#include "lfedit/tensor.hpp"

namespace lfedit {

/// Angular position (v = row, u = column) inside an M x N view grid.
struct AngularIndex {
  int v = 0;
  int u = 0;
  auto operator<=>(const AngularIndex&) const = default;
};

/// Angular grid extent: `rows` = M (vertical), `cols` = N (horizontal).
struct GridShape {
  int rows = 0;
  int cols = 0;

  int count() const { return rows * cols; }
  AngularIndex center() const { return {(rows - 1) / 2, (cols - 1) / 2}; }
  int index(AngularIndex a) const { return a.v * cols + a.u; }
  AngularIndex at(int i) const { return {i / cols, i % cols}; }
  bool contains(AngularIndex a) const { return a.v >= 0 && a.v < rows && a.u >= 0 && a.u < cols; }
  std::string str() const { return std::to_string(rows) + "x" + std::to_string(cols); }
  auto operator<=>(const GridShape&) const = default;
};

/// M x N RGB views sharing one spatial size, values in [0,1]. Views are held
/// as a [M*N, 3, H, W] tensor in row-major (v, u) order.
class LightField {
 public:
  LightField() = default;
  LightField(GridShape grid, Tensor views);

  /// Every view is a copy of `image` ([1,3,H,W]).
  static LightField tiled(GridShape grid, const Tensor& image);

  GridShape grid() const { return grid_; }
  int height() const { return views_.height(); }
  int width() const { return views_.width(); }
  const Tensor& views() const { return views_; }

  Tensor view(AngularIndex a) const { return views_.slice_batch(grid_.index(a), 1); }
  Tensor central_view() const { return view(grid_.center()); }

  bool operator==(const LightField&) const = default;

 private:
  GridShape grid_;
  Tensor views_;
};

/// The editable RGB part of a representation: [1,3,H,W], values in [0,1].
class VisualChannels {
 public:
  VisualChannels() = default;
  explicit VisualChannels(Tensor image);
  const Tensor& image() const { return image_; }
  int height() const { return image_.height(); }
  int width() const { return image_.width(); }
  bool operator==(const VisualChannels&) const = default;

 private:
  Tensor image_;
};

/// Learned float side channel(s): [1,K,H,W], finite values.
class MetaChannel {
 public:
  MetaChannel() = default;
  explicit MetaChannel(Tensor data);
  const Tensor& data() const { return data_; }
  int channels() const { return data_.channels(); }
  int height() const { return data_.height(); }
  int width() const { return data_.width(); }
  bool operator==(const MetaChannel&) const = default;

 private:
  Tensor data_;
};

struct RepresentationManifest {
  GridShape grid;
  std::string model_version;
  std::string dtype = "float32";
  int meta_channels = 1;
  int height = 0;
  int width = 0;
};

/// {visual channels, meta channel} plus the metadata needed to decode them.
struct Representation {
  VisualChannels visual;
  MetaChannel meta;
  RepresentationManifest manifest;

  /// Checks spatial alignment and manifest consistency.
  void validate() const;
};

/// Throws ContractError unless every value of `t` lies in [0,1].
void require_unit_range(const Tensor& t, const std::string& what);
/// Throws ContractError if `t` holds NaN or infinity.
void require_finite(const Tensor& t, const std::string& what);

}  // namespace lfedit
