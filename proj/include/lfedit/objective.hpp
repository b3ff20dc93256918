// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "lfedit/autograd.hpp"
#include "lfedit/geometry.hpp"
#include "lfedit/lightfield.hpp"

// Training objective
//   L   = w_warp * L_W + w_disp * L_D + w_recon * L_R
//   L_W = mean_i |W_i - L_i|
//   L_D = mean over (i, o) of |D_i(x) - D_{i-o}(x - o (.) D_i(x))|_1
//   L_R = alpha * mean |R - L| + beta * mean(1 - SSIM(R, L))
// and the PSNR / SSIM evaluation metrics.

namespace lfedit {

struct LossConfig {
  double w_warp = 0.5;
  double w_disp = 0.01;
  double w_recon = 1.0;
  double alpha = 1.0;
  double beta = 0.02;
  std::vector<AngularOffset> neighbor_offsets{{0, 1}, {1, 0}, {1, 1}};
  int ssim_window = 11;
  double ssim_sigma = 1.5;

  void validate() const;
};

struct LossReport {
  double total = 0.0;
  double warping = 0.0;
  double disparity_reg = 0.0;
  double reconstruction = 0.0;
  std::vector<double> per_view_warping;
  std::vector<double> per_view_reconstruction;
};

nlohmann::json to_json(const LossReport& r);

// ---- value-level losses ------------------------------------------------------

double warping_loss(const std::vector<WarpedView>& warped, const LightField& target);
/// `warped` is [MN,3,H,W] in the target's view order.
double warping_loss(const Tensor& warped, const LightField& target);

/// `disp` holds one map per view in row-major grid order. Returns 0 (with a
/// warning) when no (view, offset) pair lies inside the grid.
double disparity_regularity_loss(const std::vector<DisparityMap>& disp, GridShape grid,
                                 const LossConfig& cfg = {});

double reconstruction_loss(const LightField& recon, const LightField& target, const LossConfig& cfg = {});

LossReport total_loss(double lw, double ld, double lr, const LossConfig& cfg = {});

// ---- differentiable losses ---------------------------------------------------

autograd::Variable warping_loss(const autograd::Variable& warped, const Tensor& target);
/// `disp` is [MN,2,H,W] for the full grid.
autograd::Variable disparity_regularity_loss(const autograd::Variable& disp, GridShape grid,
                                             const LossConfig& cfg);
autograd::Variable reconstruction_loss(const autograd::Variable& recon, const Tensor& target,
                                       const LossConfig& cfg);
autograd::Variable total_loss(const autograd::Variable& lw, const autograd::Variable& ld,
                              const autograd::Variable& lr, const LossConfig& cfg);

/// (view, neighbour) index pairs and angular deltas used by L_D.
struct RegularityPairs {
  std::vector<int> views;
  std::vector<int> neighbours;
  std::vector<AngularOffset> deltas;
};
RegularityPairs regularity_pairs(GridShape grid, const std::vector<AngularOffset>& offsets);

// ---- metrics -----------------------------------------------------------------

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over every sample, 99 dB when MSE < 1e-10.
double psnr(const Tensor& a, const Tensor& b);
/// Mean of per-view PSNR.
double psnr(const LightField& a, const LightField& b);
/// Per-channel Gaussian-window SSIM averaged over channels (and batch).
double ssim(const Tensor& a, const Tensor& b, int window = 11, double sigma = 1.5);
/// Mean of per-view SSIM.
double ssim(const LightField& a, const LightField& b, int window = 11, double sigma = 1.5);

/// Per-view PSNR / SSIM in row-major grid order.
std::vector<double> psnr_per_view(const LightField& a, const LightField& b);
std::vector<double> ssim_per_view(const LightField& a, const LightField& b);

std::string metric_csv_header();
std::string metric_csv_row(const std::string& scene, const std::string& view, double psnr_db, double ssim_value);

}  // namespace lfedit
