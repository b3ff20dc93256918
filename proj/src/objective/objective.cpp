// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/objective.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>

#include "lfedit/errors.hpp"
#include "lfedit/objective_ops.hpp"

namespace lfedit {

using autograd::Variable;

void LossConfig::validate() const {
  require(w_warp >= 0 && w_disp >= 0 && w_recon >= 0 && alpha >= 0 && beta >= 0,
          "loss weights must be non-negative");
  for (const auto& o : neighbor_offsets)
    require((o.dv == 0 && o.du == 1) || (o.dv == 1 && o.du == 0) || (o.dv == 1 && o.du == 1),
            "neighbour offsets must be drawn from {(0,1),(1,0),(1,1)}");
  require(ssim_window >= 1 && ssim_window % 2 == 1 && ssim_sigma > 0, "SSIM window must be odd, sigma positive");
}

nlohmann::json to_json(const LossReport& r) {
  return {{"total", r.total},
          {"warping", r.warping},
          {"disparity_reg", r.disparity_reg},
          {"reconstruction", r.reconstruction},
          {"per_view_warping", r.per_view_warping},
          {"per_view_reconstruction", r.per_view_reconstruction}};
}

// ---- value-level -----------------------------------------------------------

double warping_loss(const Tensor& warped, const LightField& target) {
  require(warped.same_shape(target.views()), "warping_loss: warped " + shape_string(warped.shape()) +
                                                 " vs target " + shape_string(target.views().shape()));
  return objective_ops::l1_mean(warped, target.views());
}

double warping_loss(const std::vector<WarpedView>& warped, const LightField& target) {
  require(static_cast<int>(warped.size()) == target.grid().count(),
          "warping_loss: " + std::to_string(warped.size()) + " warped views for a " + target.grid().str() + " grid");
  Tensor stacked(target.grid().count(), 3, target.height(), target.width());
  for (std::size_t i = 0; i < warped.size(); ++i) {
    require(warped[i].image.batch() == 1 && warped[i].image.channels() == 3 &&
                warped[i].image.height() == target.height() && warped[i].image.width() == target.width(),
            "warping_loss: warped view " + std::to_string(i) + " has shape " + shape_string(warped[i].image.shape()));
    std::copy_n(warped[i].image.data(), stacked.sample_size(), stacked.data() + i * stacked.sample_size());
  }
  return warping_loss(stacked, target);
}

RegularityPairs regularity_pairs(GridShape grid, const std::vector<AngularOffset>& offsets) {
  RegularityPairs pairs;
  for (int i = 0; i < grid.count(); ++i) {
    const AngularIndex a = grid.at(i);
    for (const auto& o : offsets) {
      const AngularIndex n{a.v - o.dv, a.u - o.du};
      if (!grid.contains(n)) continue;
      pairs.views.push_back(i);
      pairs.neighbours.push_back(grid.index(n));
      pairs.deltas.push_back({-o.dv, -o.du});
    }
  }
  return pairs;
}

double disparity_regularity_loss(const std::vector<DisparityMap>& disp, GridShape grid, const LossConfig& cfg) {
  require(static_cast<int>(disp.size()) == grid.count(),
          "disparity_regularity_loss: expected " + std::to_string(grid.count()) + " maps, got " +
              std::to_string(disp.size()));
  const RegularityPairs pairs = regularity_pairs(grid, cfg.neighbor_offsets);
  if (pairs.views.empty()) {
    spdlog::warn("disparity regularity: grid {} has no neighbour pairs, returning 0", grid.str());
    return 0.0;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < pairs.views.size(); ++k) {
    const DisparityMap& di = disp[static_cast<std::size_t>(pairs.views[k])];
    const DisparityMap& dj = disp[static_cast<std::size_t>(pairs.neighbours[k])];
    const OcclusionMap o = occlusion_map(di, dj, pairs.deltas[k]);
    double sum = 0.0;
    for (float v : o.data.values()) sum += v;
    total += sum / static_cast<double>(o.data.size());
  }
  return total / static_cast<double>(pairs.views.size());
}

double reconstruction_loss(const LightField& recon, const LightField& target, const LossConfig& cfg) {
  require(recon.grid() == target.grid() && recon.views().same_shape(target.views()),
          "reconstruction_loss: shapes differ " + shape_string(recon.views().shape()) + " vs " +
              shape_string(target.views().shape()));
  const double l1 = objective_ops::l1_mean(recon.views(), target.views());
  if (cfg.beta == 0.0) return cfg.alpha * l1;
  const double s = objective_ops::ssim_mean(recon.views(), target.views(), static_cast<Tensor*>(nullptr), 1.0f,
                                            cfg.ssim_window, cfg.ssim_sigma);
  return cfg.alpha * l1 + cfg.beta * (1.0 - s);
}

LossReport total_loss(double lw, double ld, double lr, const LossConfig& cfg) {
  require(std::isfinite(lw) && std::isfinite(ld) && std::isfinite(lr), "total_loss: non-finite term");
  LossReport r;
  r.warping = lw;
  r.disparity_reg = ld;
  r.reconstruction = lr;
  r.total = cfg.w_warp * lw + cfg.w_disp * ld + cfg.w_recon * lr;
  return r;
}

// ---- differentiable --------------------------------------------------------

Variable warping_loss(const Variable& warped, const Tensor& target) { return autograd::l1_mean(warped, target); }

Variable disparity_regularity_loss(const Variable& disp, GridShape grid, const LossConfig& cfg) {
  require(disp.value().batch() == grid.count() && disp.value().channels() == 2,
          "disparity_regularity_loss: expected [" + std::to_string(grid.count()) + ",2,H,W], got " +
              shape_string(disp.value().shape()));
  const RegularityPairs pairs = regularity_pairs(grid, cfg.neighbor_offsets);
  if (pairs.views.empty()) {
    spdlog::warn("disparity regularity: grid {} has no neighbour pairs, returning 0", grid.str());
    return Variable(Tensor(1, 1, 1, 1));
  }
  const Variable di = autograd::gather_batch(disp, pairs.views);
  const Variable dj = autograd::gather_batch(disp, pairs.neighbours);
  return autograd::mean(autograd::consistency(di, dj, pairs.deltas));
}

Variable reconstruction_loss(const Variable& recon, const Tensor& target, const LossConfig& cfg) {
  const Variable l1 = autograd::l1_mean(recon, target);
  if (cfg.beta == 0.0) return autograd::weighted_sum({l1}, {static_cast<float>(cfg.alpha)});
  const Variable s = autograd::ssim_mean(recon, target, cfg.ssim_window, cfg.ssim_sigma);
  const Variable one(Tensor(1, 1, 1, 1, 1.0f));
  const float beta = static_cast<float>(cfg.beta);
  return autograd::weighted_sum({l1, s, one}, {static_cast<float>(cfg.alpha), -beta, beta});
}

Variable total_loss(const Variable& lw, const Variable& ld, const Variable& lr, const LossConfig& cfg) {
  return autograd::weighted_sum({lw, ld, lr}, {static_cast<float>(cfg.w_warp), static_cast<float>(cfg.w_disp),
                                               static_cast<float>(cfg.w_recon)});
}

// ---- metrics ---------------------------------------------------------------

double psnr(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "psnr: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  require(a.size() > 0, "psnr: empty input");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Tensor& a, const Tensor& b, int window, double sigma) {
  return objective_ops::ssim_mean(a, b, static_cast<Tensor*>(nullptr), 1.0f, window, sigma);
}

namespace {
void require_same_lf(const LightField& a, const LightField& b, const char* what) {
  require(a.grid() == b.grid() && a.views().same_shape(b.views()),
          std::string(what) + ": light fields differ in shape " + shape_string(a.views().shape()) + " vs " +
              shape_string(b.views().shape()));
}
}  // namespace

std::vector<double> psnr_per_view(const LightField& a, const LightField& b) {
  require_same_lf(a, b, "psnr");
  std::vector<double> out;
  for (int i = 0; i < a.grid().count(); ++i)
    out.push_back(psnr(a.views().slice_batch(i, 1), b.views().slice_batch(i, 1)));
  return out;
}

std::vector<double> ssim_per_view(const LightField& a, const LightField& b) {
  require_same_lf(a, b, "ssim");
  std::vector<double> out;
  for (int i = 0; i < a.grid().count(); ++i)
    out.push_back(ssim(a.views().slice_batch(i, 1), b.views().slice_batch(i, 1)));
  return out;
}

double psnr(const LightField& a, const LightField& b) {
  const auto v = psnr_per_view(a, b);
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double ssim(const LightField& a, const LightField& b, int window, double sigma) {
  require_same_lf(a, b, "ssim");
  double s = 0.0;
  for (int i = 0; i < a.grid().count(); ++i)
    s += ssim(a.views().slice_batch(i, 1), b.views().slice_batch(i, 1), window, sigma);
  return s / a.grid().count();
}

std::string metric_csv_header() { return "scene,view,psnr,ssim"; }

std::string metric_csv_row(const std::string& scene, const std::string& view, double psnr_db, double ssim_value) {
  return fmt::format("{},{},{:.6f},{:.6f}", scene, view, psnr_db, ssim_value);
}

}  // namespace lfedit
