// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lfedit/epi.hpp"
#include "lfedit/lightfield.hpp"
#include "lfedit/model.hpp"
#include "lfedit/training.hpp"

// Command implementations behind the `lfedit` executable. Each returns a
// JSON report; the executable prints it (--json) or a short summary.

namespace lfedit::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kContractFailure = 2, kRuntimeFailure = 3 };

/// Maps an in-flight exception to an exit code: contract and input errors
/// give 2, everything else 3.
int exit_code_for(const std::exception& e);

/// Reads LFEDIT_DEVICE; only "cpu" (or unset) is accepted.
std::string resolve_device();

// ---- evaluation reports ------------------------------------------------------

struct Statistic {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct SceneMetrics {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
  std::vector<double> view_psnr;
  std::vector<double> view_ssim;
  std::vector<AngularIndex> views;
};

struct ReferenceRow {
  std::string label;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::string label;
  std::vector<SceneMetrics> scenes;
  Statistic psnr;
  Statistic ssim;
  std::optional<GridShape> subgrid;
  std::vector<ReferenceRow> reference;  // full-scale published numbers, not reproduced here
};

Statistic summarize(const std::vector<double>& values);

/// Views of `grid` inside the centred `subgrid` (all views when empty).
std::vector<AngularIndex> subgrid_views(GridShape grid, std::optional<GridShape> subgrid);

SceneMetrics evaluate_scene(const std::string& name, const LightField& gt, const LightField& recon,
                            std::optional<GridShape> subgrid);
EvalReport make_report(std::string label, std::vector<SceneMetrics> scenes, std::optional<GridShape> subgrid);

nlohmann::json to_json(const EvalReport& r);
/// One CSV row per (scene, view) plus one per scene mean.
std::string to_csv(const EvalReport& r);

/// Parses "5x5" / "5" (square).
GridShape parse_grid(const std::string& text);

// ---- commands ----------------------------------------------------------------

struct SynthOptions {
  std::string kind = "constant";  // constant | two-plane
  GridShape grid{7, 7};
  int height = 64;
  int width = 64;
  double disparity = 1.0;            // constant scenes
  double background_disparity = -1.0;  // two-plane scenes
  double foreground_disparity = 1.0;
  std::uint64_t seed = 1;
};
nlohmann::json cmd_synth(const SynthOptions& opt, const fs::path& out_dir);

struct CodecOptions {
  fs::path checkpoint;
  bool bypass = false;
  int meta_channels = 1;  // bypass mode only
};

nlohmann::json cmd_encode(const fs::path& lf_dir, const CodecOptions& opt, const fs::path& out_rep);
nlohmann::json cmd_decode(const fs::path& rep_dir, const CodecOptions& opt, const fs::path& out_lf_dir);

struct TrainOptions {
  ModelConfig model;
  TrainConfig train;
};
nlohmann::json cmd_train(const std::vector<fs::path>& lf_dirs, const TrainOptions& opt, const fs::path& out_dir);

EvalReport cmd_eval(const std::vector<fs::path>& gt_dirs, const std::vector<fs::path>& recon_dirs,
                    std::optional<GridShape> subgrid);

struct RoundtripReport {
  EvalReport with_edit;
  EvalReport no_edit;
};
nlohmann::json to_json(const RoundtripReport& r);

/// L~ = D(E(L), I~_c), L_rec = D(E(L~), I_c); reports metrics of L_rec vs L,
/// together with the I~_c = I_c control.
RoundtripReport cmd_roundtrip(const fs::path& lf_dir, const fs::path& edited_visual, const CodecOptions& opt,
                              std::optional<GridShape> subgrid);
/// In-memory core of cmd_roundtrip; `params` is ignored in bypass mode.
RoundtripReport roundtrip(const LightField& lf, const Tensor& edited_visual, const ModelParams* params, bool bypass,
                          std::optional<GridShape> subgrid, const std::string& scene = "scene");

nlohmann::json cmd_epi(const fs::path& lf_dir, EpiSlice slice, const fs::path& out_png);
/// One PNG per slope; a single slope may target a .png path directly,
/// otherwise `out` is a directory receiving refocus_<slope>.png files.
nlohmann::json cmd_refocus(const fs::path& lf_dir, const std::vector<double>& slopes, const fs::path& out,
                           double max_disparity = kDefaultMaxDisparity);

}  // namespace lfedit::cli
