// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "lfedit/autograd.hpp"
#include "lfedit/geometry.hpp"
#include "lfedit/lightfield.hpp"

// Encoder E and the SepNet -> DispNet -> warp -> FusionNet decoder D.
//
//   Z      = E(L)
//   F_i    = SepNet(Z)[i]
//   D_i    = d_max * tanh(DispNet(F_i))
//   W_i    = warp(I_c, D_i, u_c - u_i)
//   O_i    = | D_i - D_c(x + (u_c - u_i) (.) D_i) |_1
//   view_i = clamp(W_i + FusionNet(W_i, O_i, F_i), 0, 1)

namespace lfedit {

inline constexpr const char* kModelVersion = "lfedit-codec/1";

struct ModelConfig {
  GridShape grid{7, 7};
  int meta_channels = 1;     // K
  int feature_channels = 16; // C, per view
  int encoder_width = 16;    // widths per level: w, 2w, 4w, 4w, 4w
  int encoder_levels = 4;
  int sepnet_width = 64;
  int sepnet_blocks = 3;
  int dispnet_width = 32;
  int dispnet_layers = 5;
  int fusion_width = 32;
  int fusion_blocks = 4;
  double max_disparity = kDefaultMaxDisparity;

  void validate() const;
  /// Smallest spatial size the encoder accepts (2^levels).
  int min_spatial_size() const { return 1 << encoder_levels; }
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Named parameter tensors of all four networks. Names are prefixed with
/// "encoder.", "sepnet.", "dispnet." or "fusion.".
class ModelParams {
 public:
  struct Entry {
    std::string name;
    autograd::Variable var;
  };

  ModelParams() = default;
  /// Parameters-free model carrying only `config`; filled with add().
  explicit ModelParams(const ModelConfig& config);
  /// He-initialized parameters, deterministic in `seed`. DispNet's output
  /// layer is scaled down so initial disparities are near zero and the
  /// FusionNet head is zero so the residual starts as the identity.
  ModelParams(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::string& version() const { return version_; }
  void set_version(std::string v) { version_ = std::move(v); }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  const autograd::Variable& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  /// Entries whose name starts with `prefix`.
  std::vector<const Entry*> group(const std::string& prefix) const;
  std::size_t parameter_count() const;

  /// Adds a parameter with an explicit value (checkpoint loading).
  void add(const std::string& name, Tensor value);

  /// Bit-exact equality of config, version and every tensor.
  bool operator==(const ModelParams& other) const;

 private:
  void add_conv(const std::string& name, int out, int in, int k, std::uint64_t seed, float gain);

  ModelConfig config_;
  std::string version_ = kModelVersion;
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Per-view feature map F_i, [1,C,H,W].
struct ViewFeature {
  Tensor data;
};

// ---- checkpoints -------------------------------------------------------------

/// Binary container: magic "LFCKPT01", little-endian uint64 header length,
/// JSON header {format_version, model_version, config, tensors[], metadata},
/// then raw little-endian float32 tensor data. Written atomically.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());
ModelParams load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

// ---- differentiable graph ----------------------------------------------------

/// [MN,3,H,W] views -> [1,K,H,W] meta channel.
autograd::Variable encoder_forward(const autograd::Variable& views, const ModelParams& p);

/// Shared SepNet trunk [1,S,H,W]; per-view features come from separate_views.
autograd::Variable sepnet_trunk(const autograd::Variable& z, const ModelParams& p);
/// [len(views),C,H,W] features for the listed flat view indices.
autograd::Variable separate_views(const autograd::Variable& trunk, const ModelParams& p,
                                  std::span<const int> views);
/// [B,C,H,W] -> [B,2,H,W] bounded by d_max.
autograd::Variable dispnet_forward(const autograd::Variable& features, const ModelParams& p);
/// Returns clamp(warped + residual, 0, 1) for [B,*,H,W] inputs.
autograd::Variable fusion_forward(const autograd::Variable& warped, const autograd::Variable& occlusion,
                                  const autograd::Variable& features, const ModelParams& p);

struct DecoderGraph {
  std::vector<int> views;          // flat indices decoded, in batch order
  autograd::Variable disparity;    // [B,2,H,W]
  autograd::Variable central_disparity;  // [1,2,H,W]
  autograd::Variable warped;       // [B,3,H,W]
  autograd::Variable occlusion;    // [B,1,H,W]
  autograd::Variable output;       // [B,3,H,W]; equals `warped` when fusion is bypassed
};

/// Decodes the listed flat view indices from their features [B,C,H,W].
/// `central_features` ([1,C,H,W]) is only read when the central view is not
/// among `views`. `visual` is [1,3,H,W].
DecoderGraph decoder_forward(const autograd::Variable& features, std::span<const int> views,
                             const autograd::Variable& central_features,
                             const autograd::Variable& visual, const ModelParams& p, bool use_fusion);

/// Angular offset u_c - u_i for flat view index i.
AngularOffset offset_to_center(GridShape grid, int view);

// ---- inference ---------------------------------------------------------------

/// Checks that the grid and spatial size are usable with this model.
void check_grid(const ModelParams& p, GridShape actual);

MetaChannel encode(const LightField& lf, const ModelParams& p);
std::vector<ViewFeature> separate(const MetaChannel& z, const ModelParams& p);
DisparityMap disparity(const ViewFeature& f, const ModelParams& p);
Tensor fuse(const WarpedView& warped, const OcclusionMap& occ, const ViewFeature& f,
            const ModelParams& p);

struct DecodeOptions {
  bool use_fusion = true;
  int chunk = 7;  // views per batched forward pass
};

LightField decode(const MetaChannel& z, const VisualChannels& visual, const ModelParams& p,
                  const DecodeOptions& options = {});

/// Decodes with the full per-view breakdown (disparity and occlusion maps).
struct DecodeDetail {
  LightField lightfield;
  Tensor warped;      // [MN,3,H,W]
  Tensor disparity;   // [MN,2,H,W]
  Tensor occlusion;   // [MN,1,H,W]
};
DecodeDetail decode_detailed(const MetaChannel& z, const VisualChannels& visual, const ModelParams& p,
                             const DecodeOptions& options = {});
/// Decoder stages after SepNet; view i reads only features[i] and features[c].
DecodeDetail decode_features(const std::vector<ViewFeature>& features, const VisualChannels& visual,
                             const ModelParams& p, const DecodeOptions& options = {});

/// Representation manifest for a meta channel produced by `p`.
RepresentationManifest make_manifest(const ModelParams& p, const MetaChannel& z);
/// Decodes a representation after checking its manifest against the model.
LightField decode_representation(const Representation& rep, const ModelParams& p,
                                 const DecodeOptions& options = {});

// ---- identity harness ----------------------------------------------------------

/// Meta channel of zeros ([1,K,H,W]).
MetaChannel bypass_encode(const LightField& lf, int meta_channels = 1);
/// Every view is the visual channels.
LightField bypass_decode(const VisualChannels& visual, GridShape grid);

}  // namespace lfedit
