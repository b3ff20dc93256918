// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "lfedit/lightfield.hpp"

namespace lfedit::io {

namespace fs = std::filesystem;

/// 8-bit PNG -> [1,3,H,W] in [0,1]. Grey and alpha inputs are converted to RGB.
Tensor read_png(const fs::path& path);
/// [1,3,H,W] or [1,1,H,W] in [0,1] -> 8-bit PNG (values clamped, rounded).
void write_png(const fs::path& path, const Tensor& image);

/// Rounds every value to the nearest multiple of 1/255 (what a PNG stores).
Tensor quantize8(const Tensor& image);

/// File name of view (v, u): `view_{v:02d}_{u:02d}.png`.
std::string view_filename(AngularIndex a);

/// Loads `view_*.png` for every index of `grid`. If `lf.json` is present its
/// grid must agree with `grid`.
LightField load_lightfield(const fs::path& dir, GridShape grid);
/// Loads a directory whose grid is given by its `lf.json` manifest.
LightField load_lightfield(const fs::path& dir);
/// Writes every view plus `lf.json`.
void save_lightfield(const LightField& lf, const fs::path& dir);

/// Writes `visual.png`, `meta.bin` (little-endian float32, H x W x K
/// interleaved) and `manifest.json`.
void write_representation(const Representation& rep, const fs::path& dir);
Representation read_representation(const fs::path& dir);

/// Optional lossy export of the meta channel: per-channel min/max followed
/// by uint16 codes, H x W x K interleaved.
void write_meta_quantized16(const MetaChannel& meta, const fs::path& path);
MetaChannel read_meta_quantized16(const fs::path& path);

/// Writes `bytes` to a temporary sibling and renames it over `path`.
void atomic_write(const fs::path& path, const std::string& bytes);
std::string read_file(const fs::path& path);

}  // namespace lfedit::io
