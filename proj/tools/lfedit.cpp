// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

// lfedit: encode, decode, train and evaluate editable light-field codecs.

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>

#include "lfedit/cli.hpp"
#include "lfedit/edits.hpp"
#include "lfedit/errors.hpp"
#include "lfedit/io.hpp"

namespace {

using namespace lfedit;
using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
  bool json = false;
  std::string log_level = "info";
};

void emit(const Globals& g, const json& report, const std::string& summary) {
  if (g.json)
    std::cout << report.dump(2) << "\n";
  else
    std::cout << summary << "\n";
}

std::string report_summary(const cli::EvalReport& r) {
  std::string s = fmt::format("{}: PSNR {:.3f} +- {:.3f} dB, SSIM {:.4f} +- {:.4f} over {} scene(s)", r.label,
                              r.psnr.mean, r.psnr.stddev, r.ssim.mean, r.ssim.stddev, r.scenes.size());
  if (r.subgrid) s += " (central " + r.subgrid->str() + " views)";
  for (const auto& ref : r.reference)
    s += fmt::format("\n  {}: PSNR {:.3f} dB, SSIM {:.4f}", ref.label, ref.psnr, ref.ssim);
  return s;
}

std::optional<GridShape> optional_grid(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return cli::parse_grid(text);
}

// "hue:20" / "exposure:1.1"
EditOperator parse_edit(const std::string& text) {
  const auto colon = text.find(':');
  require(colon != std::string::npos, "edit '" + text + "' must look like kind:parameter");
  EditOperator op{edit_kind_from_string(text.substr(0, colon)), 0.0};
  try {
    op.parameter = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ContractError("edit '" + text + "' has a non-numeric parameter");
  }
  return op;
}

std::vector<double> slope_sweep(double lo, double hi, int count) {
  require(count >= 1, "refocus sweep needs at least one slope");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("lfedit"));

  CLI::App app{"Editable light-field representation: encode, decode, train, evaluate"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json, "Print a JSON report on stdout");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  // synth
  cli::SynthOptions synth;
  std::string synth_grid = "7x7", synth_out;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic light field");
  c_synth->add_option("out", synth_out, "Output directory")->required();
  c_synth->add_option("--kind", synth.kind, "constant | two-plane")->capture_default_str();
  c_synth->add_option("--grid", synth_grid, "Angular grid MxN")->capture_default_str();
  c_synth->add_option("--height", synth.height)->capture_default_str();
  c_synth->add_option("--width", synth.width)->capture_default_str();
  c_synth->add_option("--disparity", synth.disparity, "Constant scene disparity (px/view)")->capture_default_str();
  c_synth->add_option("--background", synth.background_disparity, "Two-plane background disparity")
      ->capture_default_str();
  c_synth->add_option("--foreground", synth.foreground_disparity, "Two-plane stripe disparity")
      ->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();

  // encode / decode
  cli::CodecOptions codec;
  std::string codec_in, codec_out;
  auto add_codec = [&](CLI::App* c) {
    c->add_option("input", codec_in)->required();
    c->add_option("output", codec_out)->required();
    auto* ck = c->add_option("--checkpoint", codec.checkpoint, "Model checkpoint");
    auto* bp = c->add_flag("--bypass", codec.bypass, "Identity codec: zero meta channel, tiled decode");
    ck->excludes(bp);
    return c;
  };
  auto* c_encode = add_codec(app.add_subcommand("encode", "Light field directory -> representation directory"));
  c_encode->add_option("--meta-channels", codec.meta_channels, "Meta channels in bypass mode")->capture_default_str();
  auto* c_decode = add_codec(app.add_subcommand("decode", "Representation directory -> light field directory"));

  // train
  cli::TrainOptions train;
  std::string train_out, train_config;
  std::vector<std::string> train_inputs;
  bool no_augment = false;
  auto* c_train = app.add_subcommand("train", "Train a codec on light field directories");
  c_train->add_option("out", train_out, "Output directory (checkpoints, log, manifests)")->required();
  c_train->add_option("inputs", train_inputs, "Light field directories")->required();
  c_train->add_option("--config", train_config, "JSON file with {\"model\": {...}, \"train\": {...}}");
  auto& mc = train.model;
  auto& tc = train.train;
  c_train->add_option("--meta-channels", mc.meta_channels)->capture_default_str();
  c_train->add_option("--features", mc.feature_channels, "Feature channels per view")->capture_default_str();
  c_train->add_option("--encoder-width", mc.encoder_width)->capture_default_str();
  c_train->add_option("--encoder-levels", mc.encoder_levels)->capture_default_str();
  c_train->add_option("--sepnet-width", mc.sepnet_width)->capture_default_str();
  c_train->add_option("--sepnet-blocks", mc.sepnet_blocks)->capture_default_str();
  c_train->add_option("--dispnet-width", mc.dispnet_width)->capture_default_str();
  c_train->add_option("--dispnet-layers", mc.dispnet_layers)->capture_default_str();
  c_train->add_option("--fusion-width", mc.fusion_width)->capture_default_str();
  c_train->add_option("--fusion-blocks", mc.fusion_blocks)->capture_default_str();
  c_train->add_option("--max-disparity", mc.max_disparity)->capture_default_str();
  c_train->add_option("--patch", tc.patch_size)->capture_default_str();
  c_train->add_option("--patches-per-lf", tc.patches_per_lf)->capture_default_str();
  c_train->add_option("--stage1", tc.stage1_iters, "Stage-1 iterations (fusion bypassed)")->capture_default_str();
  c_train->add_option("--stage2", tc.stage2_iters, "Stage-2 iterations (joint, with edits)")->capture_default_str();
  c_train->add_option("--lr", tc.learning_rate)->capture_default_str();
  c_train->add_option("--batch", tc.batch_size)->capture_default_str();
  c_train->add_option("--seed", tc.seed)->capture_default_str();
  c_train->add_option("--edit-probability", tc.edit_probability)->capture_default_str();
  c_train->add_option("--checkpoint-interval", tc.checkpoint_interval)->capture_default_str();
  c_train->add_flag("--no-augment", no_augment, "Disable flip / rotation augmentation");

  // eval
  std::vector<std::string> eval_gt, eval_recon;
  std::string eval_subgrid, eval_csv;
  auto* c_eval = app.add_subcommand("eval", "PSNR / SSIM of reconstructions against ground truth");
  c_eval->add_option("--gt", eval_gt, "Ground-truth light field directories")->required();
  c_eval->add_option("--recon", eval_recon, "Reconstructed light field directories")->required();
  c_eval->add_option("--subgrid", eval_subgrid, "Only the central MxN views");
  c_eval->add_option("--csv", eval_csv, "Write per-view metrics as CSV");

  // roundtrip
  std::string rt_lf, rt_visual, rt_edit, rt_subgrid;
  cli::CodecOptions rt_codec;
  auto* c_rt = app.add_subcommand("roundtrip", "Decode with an edited visual, re-encode, decode with the original");
  c_rt->add_option("lightfield", rt_lf)->required();
  auto* rt_vis_opt = c_rt->add_option("edited_visual", rt_visual, "Edited central view PNG");
  auto* rt_edit_opt = c_rt->add_option("--edit", rt_edit, "Apply kind:parameter to the central view instead");
  rt_vis_opt->excludes(rt_edit_opt);
  auto* rt_ck = c_rt->add_option("--checkpoint", rt_codec.checkpoint);
  auto* rt_bp = c_rt->add_flag("--bypass", rt_codec.bypass);
  rt_ck->excludes(rt_bp);
  c_rt->add_option("--subgrid", rt_subgrid);

  // epi
  std::string epi_lf, epi_out, epi_mode = "horizontal";
  EpiSlice epi_slice;
  auto* c_epi = app.add_subcommand("epi", "Extract an epipolar-plane image");
  c_epi->add_option("lightfield", epi_lf)->required();
  c_epi->add_option("output", epi_out, "PNG path")->required();
  c_epi->add_option("--mode", epi_mode, "horizontal | vertical")
      ->check(CLI::IsMember({"horizontal", "vertical"}))
      ->capture_default_str();
  c_epi->add_option("--angular", epi_slice.angular_fix, "Fixed v (horizontal) or u (vertical)")->capture_default_str();
  c_epi->add_option("--spatial", epi_slice.spatial_fix, "Fixed y (horizontal) or x (vertical)")->capture_default_str();

  // refocus
  std::string rf_lf, rf_out;
  std::vector<double> rf_slopes;
  std::vector<double> rf_sweep;
  double rf_dmax = kDefaultMaxDisparity;
  auto* c_rf = app.add_subcommand("refocus", "Shift-and-add refocusing");
  c_rf->add_option("lightfield", rf_lf)->required();
  c_rf->add_option("output", rf_out, "Directory, or a .png path for a single slope")->required();
  auto* sl = c_rf->add_option("--slope", rf_slopes, "Slope(s) in px/view");
  auto* sw = c_rf->add_option("--sweep", rf_sweep, "lo hi count")->expected(3);
  sl->excludes(sw);
  c_rf->add_option("--max-disparity", rf_dmax)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return cli::kContractFailure;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(g.log_level));
    const std::string device = cli::resolve_device();
    spdlog::debug("device: {}", device);
    if (!codec.bypass && codec.checkpoint.empty() && (c_encode->parsed() || c_decode->parsed()))
      throw ContractError("either --checkpoint or --bypass is required");

    if (c_synth->parsed()) {
      synth.grid = cli::parse_grid(synth_grid);
      const json r = cli::cmd_synth(synth, synth_out);
      emit(g, r, fmt::format("wrote {} {} light field to {}", synth.grid.str(), synth.kind, synth_out));
    } else if (c_encode->parsed()) {
      const json r = cli::cmd_encode(codec_in, codec, codec_out);
      emit(g, r, fmt::format("encoded {} in {:.3f} s -> {}", codec_in, r["encode_seconds"].get<double>(), codec_out));
    } else if (c_decode->parsed()) {
      const json r = cli::cmd_decode(codec_in, codec, codec_out);
      emit(g, r, fmt::format("decoded {} views in {:.3f} s ({:.4f} s/view) -> {}", r["views"].get<int>(),
                             r["decode_seconds"].get<double>(), r["seconds_per_view"].get<double>(), codec_out));
    } else if (c_train->parsed()) {
      if (!train_config.empty()) {
        const json j = json::parse(io::read_file(train_config), nullptr, false);
        if (j.is_discarded()) throw ContractError("config " + train_config + " is not valid JSON");
        if (j.contains("model")) {
          try {
            train.model = j.at("model").get<ModelConfig>();
          } catch (const json::exception& e) {
            throw ContractError(std::string("invalid model config: ") + e.what());
          }
        }
        if (j.contains("train")) train.train = train_config_from_json(j.at("train"), train.train);
      }
      if (no_augment) train.train.augment = false;
      std::vector<fs::path> inputs(train_inputs.begin(), train_inputs.end());
      const json r = cli::cmd_train(inputs, train, train_out);
      emit(g, r, fmt::format("trained {} steps: loss {:.5f} -> {:.5f}; checkpoint {}", r["steps"].get<int>(),
                             r["initial_loss"].get<double>(), r["final_loss"].get<double>(),
                             r["checkpoint"].get<std::string>()));
    } else if (c_eval->parsed()) {
      std::vector<fs::path> gt(eval_gt.begin(), eval_gt.end()), rec(eval_recon.begin(), eval_recon.end());
      const cli::EvalReport r = cli::cmd_eval(gt, rec, optional_grid(eval_subgrid));
      if (!eval_csv.empty()) io::atomic_write(eval_csv, cli::to_csv(r));
      emit(g, cli::to_json(r), report_summary(r));
    } else if (c_rt->parsed()) {
      require(!rt_visual.empty() || !rt_edit.empty(), "roundtrip needs an edited visual PNG or --edit");
      require(rt_codec.bypass || !rt_codec.checkpoint.empty(), "either --checkpoint or --bypass is required");
      cli::RoundtripReport r;
      if (!rt_edit.empty()) {
        const LightField lf = io::load_lightfield(rt_lf);
        const Tensor edited = parse_edit(rt_edit).apply(lf.central_view());
        std::optional<ModelParams> params;
        if (!rt_codec.bypass) params = load_checkpoint(rt_codec.checkpoint);
        r = cli::roundtrip(lf, edited, params ? &*params : nullptr, rt_codec.bypass, optional_grid(rt_subgrid),
                           fs::path(rt_lf).filename().string());
      } else {
        r = cli::cmd_roundtrip(rt_lf, rt_visual, rt_codec, optional_grid(rt_subgrid));
      }
      emit(g, cli::to_json(r), report_summary(r.with_edit) + "\n" + report_summary(r.no_edit));
    } else if (c_epi->parsed()) {
      epi_slice.mode = epi_mode == "vertical" ? EpiMode::kVertical : EpiMode::kHorizontal;
      const json r = cli::cmd_epi(epi_lf, epi_slice, epi_out);
      emit(g, r, fmt::format("wrote {}x{} EPI to {}", r["height"].get<int>(), r["width"].get<int>(), epi_out));
    } else if (c_rf->parsed()) {
      std::vector<double> slopes = rf_slopes;
      if (!rf_sweep.empty()) slopes = slope_sweep(rf_sweep[0], rf_sweep[1], static_cast<int>(rf_sweep[2]));
      const json r = cli::cmd_refocus(rf_lf, slopes, rf_out, rf_dmax);
      emit(g, r, fmt::format("wrote {} refocused image(s) to {}", r["outputs"].size(), rf_out));
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return cli::exit_code_for(e);
  }
  return cli::kOk;
}
