// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lfedit/edits.hpp"
#include "lfedit/model.hpp"
#include "lfedit/objective.hpp"

namespace lfedit {

struct TrainConfig {
  int patch_size = 128;
  int patches_per_lf = 20;
  int stage1_iters = 10000;
  int stage2_iters = 50000;
  double learning_rate = 2e-4;
  double lr_final_fraction = 0.01;
  int batch_size = 4;
  std::uint64_t seed = 0;
  double edit_probability = 0.5;
  EditRanges edit_ranges;
  double texture_threshold = 0.01;
  bool augment = true;              // random flip / 180-degree rotation per patch
  int checkpoint_interval = 1000;   // steps; 0 disables periodic checkpoints
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  LossConfig loss;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

// ---- dataset -----------------------------------------------------------------

enum class PatchTransform { kIdentity, kFlipHorizontal, kRotate180 };
std::string to_string(PatchTransform t);

struct LightFieldPatch {
  LightField lf;
  int source = 0;  // index into the input light field list
  int y0 = 0;      // crop origin
  int x0 = 0;
  PatchTransform transform = PatchTransform::kIdentity;
  double average_gradient = 0.0;  // of the central view
};

/// Mirrors every view and reverses the horizontal angular order.
LightField flip_horizontal(const LightField& lf);
/// Rotates every view by 180 degrees and reverses both angular orders.
LightField rotate180(const LightField& lf);
LightField apply_transform(const LightField& lf, PatchTransform t);

/// Same spatial window in every view.
LightField crop(const LightField& lf, int y0, int x0, int height, int width);

/// patches_per_lf random crops per light field, each with one transform
/// (identity, flip or rotation) when `augment` is set. Crops whose central
/// view has average gradient below texture_threshold are dropped; light
/// fields smaller than the patch are skipped with a warning. Deterministic
/// in cfg.seed.
std::vector<LightFieldPatch> prepare_dataset(const std::vector<LightField>& lfs, const TrainConfig& cfg);

/// Reproducibility record: crop origin, transform and gradient per patch.
nlohmann::json dataset_manifest(const std::vector<LightFieldPatch>& patches, const TrainConfig& cfg);

// ---- optimisation ------------------------------------------------------------

/// Learning rate for 1-based `step` of `stage` (1 or 2): constant in stage 1,
/// lr0 (1 - (1 - f) step / T) in stage 2.
double learning_rate_at(const TrainConfig& cfg, int stage, int step);

class Adam {
 public:
  Adam(double beta1, double beta2, double epsilon) : beta1_(beta1), beta2_(beta2), eps_(epsilon) {}
  /// Updates every parameter holding a gradient; others are left untouched.
  void step(ModelParams& params, double lr);
  long steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

struct StepRecord {
  int stage = 1;
  int step = 0;         // 1-based within the stage
  int global_step = 0;  // 1-based over both stages
  double learning_rate = 0.0;
  LossReport loss;
  std::vector<std::string> edits;  // edit applied per batch sample ("none" when unedited)
  double seconds = 0.0;
};

nlohmann::json to_json(const StepRecord& r);

struct TrainOutputs {
  std::filesystem::path log_path;        // JSON-lines, one record per step
  std::filesystem::path checkpoint_dir;  // latest.ckpt, final.ckpt
  std::function<void(const StepRecord&, const ModelParams&)> on_step;
};

struct TrainResult {
  ModelParams params;
  std::vector<StepRecord> log;
};

/// Two-stage schedule. Stage 1 trains encoder, SepNet and DispNet with
/// FusionNet bypassed; stage 2 trains all networks with edit augmentation.
/// A non-finite loss throws DivergenceError after saving the parameters that
/// last produced a finite loss as latest.ckpt.
TrainResult train(const std::vector<LightFieldPatch>& dataset, const ModelConfig& model_cfg,
                  const TrainConfig& cfg, const TrainOutputs& outputs = {},
                  std::optional<ModelParams> initial = std::nullopt);

/// Forward pass plus loss for one patch; fills `report` with values.
autograd::Variable training_loss(const ModelParams& params, const LightField& input, const LightField& target,
                                 const Tensor& visual, bool use_fusion, const LossConfig& cfg,
                                 LossReport* report = nullptr);

}  // namespace lfedit
