// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "lfedit/cli.hpp"
#include "lfedit/errors.hpp"
#include "lfedit/geometry.hpp"
#include "lfedit/io.hpp"
#include "lfedit/objective.hpp"
#include "lfedit/synthetic.hpp"

namespace lfedit::cli {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json grid_json(GridShape g) { return json::array({g.rows, g.cols}); }

json tensor_stats(const Tensor& t) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  for (float v : t.values()) {
    lo = std::min<double>(lo, v);
    hi = std::max<double>(hi, v);
    sum += v;
  }
  return {{"min", lo}, {"max", hi}, {"mean", sum / static_cast<double>(t.size())}};
}

// Published full-scale results (406 light fields, multi-day GPU training).
// Reported next to desk-scale numbers for orientation only.
std::vector<ReferenceRow> eval_reference() {
  return {{"full-scale reference, central 5x5 views", 37.232, 0.9638}};
}

std::vector<ReferenceRow> roundtrip_reference(bool edited) {
  if (edited) return {{"full-scale reference, round trip with edits", 37.663, 0.9739}};
  return {{"full-scale reference, round trip without edits", 37.790, 0.9742}};
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ContractError*>(&e) || dynamic_cast<const IoError*>(&e)) return kContractFailure;
  return kRuntimeFailure;
}

std::string resolve_device() {
  const char* env = std::getenv("LFEDIT_DEVICE");
  const std::string device = env ? env : "cpu";
  if (device != "cpu")
    throw ContractError("LFEDIT_DEVICE='" + device + "' is not available; this build supports only 'cpu'");
  return device;
}

// ---- reports ---------------------------------------------------------------

Statistic summarize(const std::vector<double>& values) {
  Statistic s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

GridShape parse_grid(const std::string& text) {
  int r = 0, c = 0;
  char sep = 0;
  std::istringstream in(text);
  if (!(in >> r)) throw ContractError("invalid grid '" + text + "'");
  if (in >> sep) {
    if ((sep != 'x' && sep != 'X') || !(in >> c)) throw ContractError("invalid grid '" + text + "'");
  } else {
    c = r;
  }
  if (r < 1 || c < 1 || r % 2 == 0 || c % 2 == 0) throw ContractError("grid '" + text + "' must have odd extents");
  return {r, c};
}

std::vector<AngularIndex> subgrid_views(GridShape grid, std::optional<GridShape> subgrid) {
  std::vector<AngularIndex> out;
  if (subgrid) {
    require(subgrid->rows % 2 == 1 && subgrid->cols % 2 == 1 && subgrid->rows <= grid.rows &&
                subgrid->cols <= grid.cols,
            "subgrid " + subgrid->str() + " must be odd and fit inside " + grid.str());
  }
  const AngularIndex c = grid.center();
  const int hr = subgrid ? subgrid->rows / 2 : grid.rows, hc = subgrid ? subgrid->cols / 2 : grid.cols;
  for (int i = 0; i < grid.count(); ++i) {
    const AngularIndex a = grid.at(i);
    if (std::abs(a.v - c.v) <= hr && std::abs(a.u - c.u) <= hc) out.push_back(a);
  }
  return out;
}

SceneMetrics evaluate_scene(const std::string& name, const LightField& gt, const LightField& recon,
                            std::optional<GridShape> subgrid) {
  require(gt.grid() == recon.grid() && gt.views().same_shape(recon.views()),
          "scene " + name + ": ground truth " + shape_string(gt.views().shape()) + " and reconstruction " +
              shape_string(recon.views().shape()) + " differ");
  SceneMetrics m;
  m.name = name;
  m.views = subgrid_views(gt.grid(), subgrid);
  for (const AngularIndex a : m.views) {
    const Tensor g = gt.view(a), r = recon.view(a);
    m.view_psnr.push_back(psnr(g, r));
    m.view_ssim.push_back(ssim(g, r));
  }
  m.psnr = summarize(m.view_psnr).mean;
  m.ssim = summarize(m.view_ssim).mean;
  return m;
}

EvalReport make_report(std::string label, std::vector<SceneMetrics> scenes, std::optional<GridShape> subgrid) {
  EvalReport r;
  r.label = std::move(label);
  r.scenes = std::move(scenes);
  r.subgrid = subgrid;
  std::vector<double> p, s;
  for (const auto& sc : r.scenes) p.push_back(sc.psnr), s.push_back(sc.ssim);
  r.psnr = summarize(p);
  r.ssim = summarize(s);
  return r;
}

json to_json(const EvalReport& r) {
  json scenes = json::array();
  for (const auto& s : r.scenes) {
    json views = json::array();
    for (std::size_t i = 0; i < s.views.size(); ++i)
      views.push_back({{"v", s.views[i].v}, {"u", s.views[i].u}, {"psnr", s.view_psnr[i]}, {"ssim", s.view_ssim[i]}});
    scenes.push_back({{"name", s.name}, {"psnr", s.psnr}, {"ssim", s.ssim}, {"views", views}});
  }
  json ref = json::array();
  for (const auto& row : r.reference) ref.push_back({{"label", row.label}, {"psnr", row.psnr}, {"ssim", row.ssim}});
  return {{"label", r.label},
          {"subgrid", r.subgrid ? json(grid_json(*r.subgrid)) : json(nullptr)},
          {"psnr", {{"mean", r.psnr.mean}, {"stddev", r.psnr.stddev}}},
          {"ssim", {{"mean", r.ssim.mean}, {"stddev", r.ssim.stddev}}},
          {"scenes", scenes},
          {"reference", ref},
          {"metric_notes", "PSNR on [0,1] with peak 1, capped at 99 dB; SSIM per channel, Gaussian window 11, "
                           "sigma 1.5, averaged over channels and views"}};
}

std::string to_csv(const EvalReport& r) {
  std::string out = metric_csv_header() + "\n";
  for (const auto& s : r.scenes) {
    for (std::size_t i = 0; i < s.views.size(); ++i)
      out += metric_csv_row(s.name, fmt::format("{}_{}", s.views[i].v, s.views[i].u), s.view_psnr[i], s.view_ssim[i]) +
             "\n";
    out += metric_csv_row(s.name, "mean", s.psnr, s.ssim) + "\n";
  }
  return out;
}

json to_json(const RoundtripReport& r) { return {{"with_edit", to_json(r.with_edit)}, {"no_edit", to_json(r.no_edit)}}; }

// ---- commands --------------------------------------------------------------

json cmd_synth(const SynthOptions& opt, const fs::path& out_dir) {
  LightField lf;
  if (opt.kind == "constant") {
    lf = synthetic::constant_disparity(opt.grid, opt.height, opt.width, opt.disparity, opt.seed);
  } else if (opt.kind == "two-plane") {
    const int x0 = opt.width * 3 / 8, x1 = opt.width * 5 / 8;
    lf = synthetic::two_plane(opt.grid, opt.height, opt.width, opt.background_disparity, opt.foreground_disparity, x0,
                              x1, opt.seed)
             .lightfield;
  } else {
    throw ContractError("unknown synthetic scene '" + opt.kind + "' (constant|two-plane)");
  }
  io::save_lightfield(lf, out_dir);
  return {{"command", "synth"}, {"kind", opt.kind}, {"grid_shape", grid_json(opt.grid)},
          {"height", opt.height}, {"width", opt.width}, {"output", out_dir.string()}};
}

json cmd_encode(const fs::path& lf_dir, const CodecOptions& opt, const fs::path& out_rep) {
  const LightField lf = io::load_lightfield(lf_dir);
  const auto t0 = std::chrono::steady_clock::now();
  Representation rep;
  if (opt.bypass) {
    MetaChannel z = bypass_encode(lf, opt.meta_channels);
    rep.manifest = {lf.grid(), "bypass", "float32", z.channels(), lf.height(), lf.width()};
    rep.meta = std::move(z);
  } else {
    const ModelParams params = load_checkpoint(opt.checkpoint);
    check_grid(params, lf.grid());
    MetaChannel z = encode(lf, params);
    rep.manifest = make_manifest(params, z);
    rep.meta = std::move(z);
  }
  const double secs = seconds_since(t0);
  rep.visual = VisualChannels(lf.central_view());
  io::write_representation(rep, out_rep);
  return {{"command", "encode"},
          {"grid_shape", grid_json(lf.grid())},
          {"meta_channels", rep.meta.channels()},
          {"meta_stats", tensor_stats(rep.meta.data())},
          {"encode_seconds", secs},
          {"output", out_rep.string()}};
}

json cmd_decode(const fs::path& rep_dir, const CodecOptions& opt, const fs::path& out_lf_dir) {
  const Representation rep = io::read_representation(rep_dir);
  const auto t0 = std::chrono::steady_clock::now();
  LightField lf;
  if (opt.bypass) {
    lf = bypass_decode(rep.visual, rep.manifest.grid);
  } else {
    const ModelParams params = load_checkpoint(opt.checkpoint);
    lf = decode_representation(rep, params);
  }
  const double secs = seconds_since(t0);
  io::save_lightfield(lf, out_lf_dir);
  return {{"command", "decode"},
          {"grid_shape", grid_json(lf.grid())},
          {"views", lf.grid().count()},
          {"decode_seconds", secs},
          {"seconds_per_view", secs / lf.grid().count()},
          {"output", out_lf_dir.string()}};
}

json cmd_train(const std::vector<fs::path>& lf_dirs, const TrainOptions& opt, const fs::path& out_dir) {
  require(!lf_dirs.empty(), "train: no light fields given");
  std::vector<LightField> lfs;
  for (const auto& d : lf_dirs) lfs.push_back(io::load_lightfield(d));
  ModelConfig model = opt.model;
  model.grid = lfs.front().grid();
  for (const auto& lf : lfs) check_grid(ModelParams(model), lf.grid());

  const std::vector<LightFieldPatch> dataset = prepare_dataset(lfs, opt.train);
  require(!dataset.empty(), "train: every patch was filtered out (textureless or too small)");
  fs::create_directories(out_dir);
  io::atomic_write(out_dir / "dataset.json", dataset_manifest(dataset, opt.train).dump(2) + "\n");
  json config = {{"model", model}, {"train", to_json(opt.train)}};
  io::atomic_write(out_dir / "config.json", config.dump(2) + "\n");

  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult result = train(dataset, model, opt.train, {out_dir / "train_log.jsonl", out_dir, {}});
  const StepRecord& last = result.log.back();
  return {{"command", "train"},
          {"patches", dataset.size()},
          {"steps", result.log.size()},
          {"initial_loss", result.log.front().loss.total},
          {"final_loss", last.loss.total},
          {"parameters", result.params.parameter_count()},
          {"train_seconds", seconds_since(t0)},
          {"checkpoint", (out_dir / "final.ckpt").string()},
          {"log", (out_dir / "train_log.jsonl").string()}};
}

EvalReport cmd_eval(const std::vector<fs::path>& gt_dirs, const std::vector<fs::path>& recon_dirs,
                    std::optional<GridShape> subgrid) {
  require(!gt_dirs.empty(), "eval: no scenes given");
  require(gt_dirs.size() == recon_dirs.size(), "eval: " + std::to_string(gt_dirs.size()) + " ground-truth scenes but " +
                                                   std::to_string(recon_dirs.size()) + " reconstructions");
  std::vector<SceneMetrics> scenes;
  for (std::size_t i = 0; i < gt_dirs.size(); ++i) {
    const LightField gt = io::load_lightfield(gt_dirs[i]);
    const LightField recon = io::load_lightfield(recon_dirs[i], gt.grid());
    scenes.push_back(evaluate_scene(gt_dirs[i].filename().string(), gt, recon, subgrid));
  }
  EvalReport r = make_report("eval", std::move(scenes), subgrid);
  r.reference = eval_reference();
  return r;
}

RoundtripReport roundtrip(const LightField& lf, const Tensor& edited_visual, const ModelParams* params, bool bypass,
                          std::optional<GridShape> subgrid, const std::string& scene) {
  require(edited_visual.batch() == 1 && edited_visual.channels() == 3 && edited_visual.height() == lf.height() &&
              edited_visual.width() == lf.width(),
          "roundtrip: edited visual " + shape_string(edited_visual.shape()) + " is not aligned with the light field " +
              shape_string(lf.views().shape()));
  require(bypass || params, "roundtrip: a model is required outside bypass mode");
  if (params) check_grid(*params, lf.grid());
  const VisualChannels original(lf.central_view());

  auto enc = [&](const LightField& x) { return bypass ? bypass_encode(x) : encode(x, *params); };
  auto dec = [&](const MetaChannel& z, const VisualChannels& v) {
    return bypass ? bypass_decode(v, lf.grid()) : decode(z, v, *params);
  };
  auto chain = [&](const VisualChannels& first) {
    const LightField edited = dec(enc(lf), first);
    return dec(enc(edited), original);
  };

  RoundtripReport r;
  r.with_edit = make_report("with_edit", {evaluate_scene(scene, lf, chain(VisualChannels(edited_visual)), subgrid)},
                            subgrid);
  r.with_edit.reference = roundtrip_reference(true);
  r.no_edit = make_report("no_edit", {evaluate_scene(scene, lf, chain(original), subgrid)}, subgrid);
  r.no_edit.reference = roundtrip_reference(false);
  return r;
}

RoundtripReport cmd_roundtrip(const fs::path& lf_dir, const fs::path& edited_visual, const CodecOptions& opt,
                              std::optional<GridShape> subgrid) {
  const LightField lf = io::load_lightfield(lf_dir);
  const Tensor edited = io::read_png(edited_visual);
  std::optional<ModelParams> params;
  if (!opt.bypass) params = load_checkpoint(opt.checkpoint);
  return roundtrip(lf, edited, params ? &*params : nullptr, opt.bypass, subgrid, lf_dir.filename().string());
}

json cmd_epi(const fs::path& lf_dir, EpiSlice slice, const fs::path& out_png) {
  const LightField lf = io::load_lightfield(lf_dir);
  const Epi epi = extract_epi(lf, slice);
  io::write_png(out_png, epi.image);
  return {{"command", "epi"},
          {"mode", slice.mode == EpiMode::kHorizontal ? "horizontal" : "vertical"},
          {"angular_fix", slice.angular_fix},
          {"spatial_fix", slice.spatial_fix},
          {"height", epi.image.height()},
          {"width", epi.image.width()},
          {"output", out_png.string()}};
}

json cmd_refocus(const fs::path& lf_dir, const std::vector<double>& slopes, const fs::path& out, double max_disparity) {
  require(!slopes.empty(), "refocus: no slopes given");
  for (double s : slopes)
    require(std::abs(s) <= max_disparity,
            fmt::format("refocus: |slope| {} exceeds d_max {}", s, max_disparity));
  const LightField lf = io::load_lightfield(lf_dir);
  const bool single_file = slopes.size() == 1 && out.extension() == ".png";
  json files = json::array();
  for (double s : slopes) {
    const fs::path path = single_file ? out : out / fmt::format("refocus_{:+.3f}.png", s);
    io::write_png(path, refocus(lf, s, max_disparity));
    files.push_back({{"slope", s}, {"path", path.string()}});
  }
  return {{"command", "refocus"}, {"outputs", files}};
}

}  // namespace lfedit::cli
