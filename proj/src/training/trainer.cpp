// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "lfedit/errors.hpp"
#include "lfedit/training.hpp"

namespace lfedit {

using autograd::Variable;
using nlohmann::json;

void TrainConfig::validate() const {
  require(patch_size >= 1 && patches_per_lf >= 1 && batch_size >= 1, "train: counts must be positive");
  require(stage1_iters >= 0 && stage2_iters >= 0 && stage1_iters + stage2_iters >= 1,
          "train: iteration counts must be non-negative and not both zero");
  require(learning_rate > 0.0, "train: learning_rate must be positive");
  require(lr_final_fraction > 0.0 && lr_final_fraction <= 1.0, "train: lr_final_fraction must lie in (0,1]");
  require(edit_probability >= 0.0 && edit_probability <= 1.0, "train: edit_probability must lie in [0,1]");
  require(checkpoint_interval >= 0, "train: checkpoint_interval must be >= 0");
  loss.validate();
}

json to_json(const TrainConfig& c) {
  auto range = [](const Range& r) { return json::array({r.lo, r.hi}); };
  return {{"patch_size", c.patch_size},
          {"patches_per_lf", c.patches_per_lf},
          {"stage1_iters", c.stage1_iters},
          {"stage2_iters", c.stage2_iters},
          {"learning_rate", c.learning_rate},
          {"lr_final_fraction", c.lr_final_fraction},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"edit_probability", c.edit_probability},
          {"edit_ranges",
           {{"hue_degrees", range(c.edit_ranges.hue_degrees)},
            {"saturation", range(c.edit_ranges.saturation)},
            {"exposure", range(c.edit_ranges.exposure)},
            {"contrast", range(c.edit_ranges.contrast)}}},
          {"texture_threshold", c.texture_threshold},
          {"augment", c.augment},
          {"checkpoint_interval", c.checkpoint_interval},
          {"adam", {c.adam_beta1, c.adam_beta2, c.adam_epsilon}},
          {"loss",
           {{"w_warp", c.loss.w_warp},
            {"w_disp", c.loss.w_disp},
            {"w_recon", c.loss.w_recon},
            {"alpha", c.loss.alpha},
            {"beta", c.loss.beta}}}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  auto range = [](const json& r) { return Range{r.at(0).get<double>(), r.at(1).get<double>()}; };
  try {
    c.patch_size = j.value("patch_size", c.patch_size);
    c.patches_per_lf = j.value("patches_per_lf", c.patches_per_lf);
    c.stage1_iters = j.value("stage1_iters", c.stage1_iters);
    c.stage2_iters = j.value("stage2_iters", c.stage2_iters);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_final_fraction = j.value("lr_final_fraction", c.lr_final_fraction);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.edit_probability = j.value("edit_probability", c.edit_probability);
    c.texture_threshold = j.value("texture_threshold", c.texture_threshold);
    c.augment = j.value("augment", c.augment);
    c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
    if (j.contains("edit_ranges")) {
      const json& e = j.at("edit_ranges");
      if (e.contains("hue_degrees")) c.edit_ranges.hue_degrees = range(e.at("hue_degrees"));
      if (e.contains("saturation")) c.edit_ranges.saturation = range(e.at("saturation"));
      if (e.contains("exposure")) c.edit_ranges.exposure = range(e.at("exposure"));
      if (e.contains("contrast")) c.edit_ranges.contrast = range(e.at("contrast"));
    }
    if (j.contains("adam")) {
      c.adam_beta1 = j.at("adam").at(0).get<double>();
      c.adam_beta2 = j.at("adam").at(1).get<double>();
      c.adam_epsilon = j.at("adam").at(2).get<double>();
    }
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      c.loss.w_warp = l.value("w_warp", c.loss.w_warp);
      c.loss.w_disp = l.value("w_disp", c.loss.w_disp);
      c.loss.w_recon = l.value("w_recon", c.loss.w_recon);
      c.loss.alpha = l.value("alpha", c.loss.alpha);
      c.loss.beta = l.value("beta", c.loss.beta);
    }
  } catch (const json::exception& e) {
    throw ContractError(std::string("invalid training config: ") + e.what());
  }
  c.validate();
  return c;
}

double learning_rate_at(const TrainConfig& cfg, int stage, int step) {
  require(stage == 1 || stage == 2, "learning_rate_at: stage must be 1 or 2");
  if (stage == 1) return cfg.learning_rate;
  const int total = cfg.stage2_iters;
  require(step >= 0 && step <= total, "learning_rate_at: step outside stage 2");
  return cfg.learning_rate * (1.0 - (1.0 - cfg.lr_final_fraction) * static_cast<double>(step) / total);
}

void Adam::step(ModelParams& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& e : params.entries()) {
    if (!e.var.has_grad()) continue;
    Tensor& w = e.var.mutable_value();
    const Tensor& g = e.var.grad();
    auto [it, fresh] = moments_.try_emplace(e.name);
    if (fresh) it->second = {Tensor(w.batch(), w.channels(), w.height(), w.width()),
                             Tensor(w.batch(), w.channels(), w.height(), w.width())};
    float* m = it->second.first.data();
    float* v = it->second.second.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.data()[i];
      m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * gi);
      v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * gi * gi);
      const double mh = m[i] / c1, vh = v[i] / c2;
      w.data()[i] -= static_cast<float>(lr * mh / (std::sqrt(vh) + eps_));
    }
  }
}

json to_json(const StepRecord& r) {
  return {{"stage", r.stage},
          {"step", r.step},
          {"global_step", r.global_step},
          {"lr", r.learning_rate},
          {"total", r.loss.total},
          {"warping", r.loss.warping},
          {"disparity_reg", r.loss.disparity_reg},
          {"reconstruction", r.loss.reconstruction},
          {"per_view_warping", r.loss.per_view_warping},
          {"per_view_reconstruction", r.loss.per_view_reconstruction},
          {"edits", r.edits},
          {"seconds", r.seconds}};
}

namespace {

std::vector<double> per_view_l1(const Tensor& a, const Tensor& b) {
  std::vector<double> out(static_cast<std::size_t>(a.batch()));
  const std::size_t n = a.sample_size();
  for (int i = 0; i < a.batch(); ++i) {
    double s = 0.0;
    const float* pa = a.data() + i * n;
    const float* pb = b.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) s += std::abs(pa[k] - pb[k]);
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(n);
  }
  return out;
}

void add_into(std::vector<double>& acc, const std::vector<double>& v, double scale) {
  if (acc.empty()) acc.assign(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += scale * v[i];
}

}  // namespace

Variable training_loss(const ModelParams& params, const LightField& input, const LightField& target,
                       const Tensor& visual, bool use_fusion, const LossConfig& cfg, LossReport* report) {
  const GridShape grid = params.config().grid;
  check_grid(params, input.grid());
  check_grid(params, target.grid());
  std::vector<int> all(static_cast<std::size_t>(grid.count()));
  std::iota(all.begin(), all.end(), 0);

  const Variable z = encoder_forward(Variable(input.views()), params);
  const Variable feats = separate_views(sepnet_trunk(z, params), params, all);
  const DecoderGraph g = decoder_forward(feats, all, Variable(), Variable(visual), params, use_fusion);
  const Variable lw = warping_loss(g.warped, target.views());
  const Variable ld = disparity_regularity_loss(g.disparity, grid, cfg);
  const Variable lr = reconstruction_loss(g.output, target.views(), cfg);
  Variable total = total_loss(lw, ld, lr, cfg);
  if (report) {
    report->warping = lw.item();
    report->disparity_reg = ld.item();
    report->reconstruction = lr.item();
    report->total = total.item();
    report->per_view_warping = per_view_l1(g.warped.value(), target.views());
    report->per_view_reconstruction = per_view_l1(g.output.value(), target.views());
  }
  return total;
}

TrainResult train(const std::vector<LightFieldPatch>& dataset, const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const TrainOutputs& outputs, std::optional<ModelParams> initial) {
  cfg.validate();
  model_cfg.validate();
  require(!dataset.empty(), "train: dataset is empty");
  for (const auto& p : dataset) {
    require(p.lf.grid() == model_cfg.grid, "train: patch grid " + p.lf.grid().str() + " does not match model grid " +
                                               model_cfg.grid.str());
    require(p.lf.height() >= model_cfg.min_spatial_size() && p.lf.width() >= model_cfg.min_spatial_size(),
            "train: patches must be at least " + std::to_string(model_cfg.min_spatial_size()) + " px");
  }

  TrainResult result{initial ? std::move(*initial) : ModelParams(model_cfg, cfg.seed), {}};
  ModelParams& params = result.params;
  require(params.config() == model_cfg, "train: initial parameters were built for a different config");
  Adam adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
  std::mt19937_64 rng(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);

  std::ofstream log;
  if (!outputs.log_path.empty()) {
    if (outputs.log_path.has_parent_path()) std::filesystem::create_directories(outputs.log_path.parent_path());
    log.open(outputs.log_path, std::ios::trunc);
    if (!log) throw IoError("cannot open training log " + outputs.log_path.string());
  }
  auto save = [&](const std::string& name, const StepRecord& r) {
    if (outputs.checkpoint_dir.empty()) return;
    save_checkpoint(params, outputs.checkpoint_dir / name,
                    {{"stage", r.stage}, {"step", r.step}, {"global_step", r.global_step}, {"train", to_json(cfg)}});
  };

  // Parameters that last produced a finite loss; written on divergence.
  std::vector<Tensor> good;
  auto snapshot = [&] {
    good.clear();
    for (const auto& e : params.entries()) good.push_back(e.var.value());
  };
  auto save_good = [&](const StepRecord& r) {
    if (outputs.checkpoint_dir.empty()) return;
    ModelParams kept(params.config());
    kept.set_version(params.version());
    for (std::size_t k = 0; k < good.size(); ++k) kept.add(params.entries()[k].name, good[k]);
    save_checkpoint(kept, outputs.checkpoint_dir / "latest.ckpt",
                    {{"stage", r.stage}, {"step", r.step}, {"global_step", r.global_step}, {"train", to_json(cfg)}});
  };
  snapshot();
  int global = 0;
  StepRecord last;
  for (int stage = 1; stage <= 2; ++stage) {
    const int iters = stage == 1 ? cfg.stage1_iters : cfg.stage2_iters;
    const bool fusion = stage == 2;
    for (int step = 1; step <= iters; ++step) {
      const auto t0 = std::chrono::steady_clock::now();
      StepRecord rec;
      rec.stage = stage;
      rec.step = step;
      rec.global_step = ++global;
      rec.learning_rate = learning_rate_at(cfg, stage, step);
      for (auto& e : params.entries()) e.var.zero_grad();

      const double inv_batch = 1.0 / cfg.batch_size;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const LightFieldPatch& patch = dataset[pick(rng)];
        EditPair pair = fusion ? sample_edit_pair(patch.lf, cfg.edit_probability, cfg.edit_ranges, rng)
                               : EditPair{VisualChannels(patch.lf.central_view()), patch.lf, std::nullopt};
        rec.edits.push_back(pair.edit ? to_string(pair.edit->kind) : "none");
        LossReport rep;
        const Variable loss =
            training_loss(params, patch.lf, pair.target, pair.visual.image(), fusion, cfg.loss, &rep);
        if (!std::isfinite(rep.total)) {
          StepRecord bad = rec;
          bad.loss = rep;
          if (log) log << to_json(bad).dump() << "\n" << std::flush;
          save_good(last);
          throw DivergenceError("non-finite loss at stage " + std::to_string(stage) + " step " +
                                std::to_string(step) + "; last good parameters kept in latest.ckpt");
        }
        autograd::backward(autograd::weighted_sum({loss}, {static_cast<float>(inv_batch)}));
        rec.loss.total += inv_batch * rep.total;
        rec.loss.warping += inv_batch * rep.warping;
        rec.loss.disparity_reg += inv_batch * rep.disparity_reg;
        rec.loss.reconstruction += inv_batch * rep.reconstruction;
        add_into(rec.loss.per_view_warping, rep.per_view_warping, inv_batch);
        add_into(rec.loss.per_view_reconstruction, rep.per_view_reconstruction, inv_batch);
      }
      snapshot();
      adam.step(params, rec.learning_rate);
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      if (log) log << to_json(rec).dump() << "\n" << std::flush;
      if (outputs.on_step) outputs.on_step(rec, params);
      if (cfg.checkpoint_interval > 0 && rec.global_step % cfg.checkpoint_interval == 0) save("latest.ckpt", rec);
      if (step == 1 || step == iters || step % 100 == 0)
        spdlog::info("stage {} step {}/{} loss {:.5f} (W {:.5f} D {:.5f} R {:.5f}) lr {:.2e}", stage, step, iters,
                     rec.loss.total, rec.loss.warping, rec.loss.disparity_reg, rec.loss.reconstruction,
                     rec.learning_rate);
      last = rec;
      result.log.push_back(std::move(rec));
    }
  }
  for (auto& e : params.entries()) e.var.zero_grad();
  save("final.ckpt", last);
  return result;
}

}  // namespace lfedit
