// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion with its runtime
// and exits non-zero if any criterion fails.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lfedit/cli.hpp"
#include "lfedit/edits.hpp"
#include "lfedit/epi.hpp"
#include "lfedit/geometry.hpp"
#include "lfedit/io.hpp"
#include "lfedit/model.hpp"
#include "lfedit/objective.hpp"
#include "lfedit/objective_ops.hpp"
#include "lfedit/synthetic.hpp"
#include "lfedit/training.hpp"
#include "support/test_support.hpp"

using namespace lfedit;
using namespace lfedit::testing;

namespace {

using TensorD = BasicTensor<double>;

// Collects failed checks of one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::ostringstream os;
    const auto& items = failures_.empty() ? notes_ : failures_;
    for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "; " : "") << items[i];
    return os.str();
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt_double(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string fmt_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// Runs `body`, prints the result line and returns pass/fail. A budget of 0
// means no runtime limit.
bool run_criterion(int id, const std::string& name, double budget_s, const std::function<void(Checks&)>& body) {
  Checks checks;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(checks);
  } catch (const std::exception& e) {
    checks.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs >= budget_s)
    checks.expect(false, "runtime " + fmt_double(secs, 1) + " s exceeds budget " + fmt_double(budget_s, 0) + " s");
  std::string budget = budget_s > 0 ? ", budget " + fmt_double(budget_s, 0) + " s" : "";
  std::printf("criterion %d: %s  %s  (%.2f s%s)  %s\n", id, checks.ok() ? "PASS" : "FAIL", name.c_str(), secs,
              budget.c_str(), checks.summary().c_str());
  std::fflush(stdout);
  return checks.ok();
}

TensorD to_double(const Tensor& t) {
  TensorD d(t.batch(), t.channels(), t.height(), t.width());
  for (std::size_t i = 0; i < t.size(); ++i) d.data()[i] = t.data()[i];
  return d;
}

// Smooth source so finite differences stay well conditioned.
TensorD smooth_image(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.283);
  TensorD img(1, c, h, w);
  for (int ch = 0; ch < c; ++ch) {
    const double p0 = phase(rng), p1 = phase(rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img(0, ch, y, x) = 0.5 + 0.25 * std::sin(0.37 * x + p0) * std::cos(0.29 * y + p1) + 0.1 * std::sin(0.11 * (x + y));
  }
  return img;
}

// Distance of a warp sampling coordinate to the nearest integer (bilinear kink).
double kink_distance(double v) { return std::abs(v - std::round(v)); }

// ---- criterion 1 ---------------------------------------------------------------

void geometry_suite(Checks& c) {
  const Tensor img = random_tensor(1, 3, 48, 40, 101);
  for (AngularOffset delta : {AngularOffset{0, 0}, AngularOffset{0, 3}, AngularOffset{-2, 1}, AngularOffset{3, -3}}) {
    const WarpedView w = warp_view(img, DisparityMap::constant(48, 40, 0.0f, 0.0f), delta);
    c.expect(w.image == img, "zero-disparity warp is not bit-exact for delta (" + std::to_string(delta.dv) + "," +
                                 std::to_string(delta.du) + ")");
  }
  const WarpedView self = warp_view(img, DisparityMap(random_tensor(1, 2, 48, 40, 102, -3, 3)), {0, 0});
  c.expect(self.image == img, "zero-offset warp with random disparity is not bit-exact");

  struct Shift {
    float dh, dv;
    AngularOffset delta;
  };
  double worst = 0.0;
  for (const Shift& s : {Shift{1, 0, {0, 3}}, Shift{1, 1, {2, -1}}, Shift{2, -1, {-1, 2}}}) {
    const WarpedView w = warp_view(img, DisparityMap::constant(48, 40, s.dh, s.dv), s.delta);
    const int dx = static_cast<int>(s.delta.du * s.dh), dy = static_cast<int>(s.delta.dv * s.dv);
    const Tensor oracle = shift_oracle(img, dx, dy);
    int interior = 0;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      if (std::isnan(oracle.data()[i])) continue;
      worst = std::max(worst, double(std::abs(oracle.data()[i] - w.image.data()[i])));
      ++interior;
    }
    c.expect(interior > 0, "integer shift left no interior pixels");
  }
  c.expect(worst < 1e-6, "integer-shift warp error " + fmt_sci(worst));

  double occ_zero = 0.0, occ_075 = 0.0;
  for (AngularOffset delta : {AngularOffset{0, 1}, AngularOffset{-3, 2}, AngularOffset{1, -1}}) {
    const auto same = DisparityMap::constant(32, 32, 0.7f, -0.4f);
    for (float v : occlusion_map(same, same, delta).data.values()) occ_zero = std::max(occ_zero, double(std::abs(v)));
    const OcclusionMap o = occlusion_map(DisparityMap::constant(32, 32, 1.0f, 0.0f),
                                         DisparityMap::constant(32, 32, 0.5f, 0.25f), delta);
    for (float v : o.data.values()) occ_075 = std::max(occ_075, std::abs(double(v) - 0.75));
  }
  c.expect(occ_zero < 1e-6, "equal constant fields give occlusion " + fmt_sci(occ_zero));
  c.expect(occ_075 < 1e-6, "constant-field occlusion deviates from 0.75 by " + fmt_sci(occ_075));
  c.note("shift error " + fmt_sci(worst) + ", occlusion errors " + fmt_sci(occ_zero) + "/" + fmt_sci(occ_075));
}

// ---- criterion 2 ---------------------------------------------------------------

struct ProbeStats {
  int probes = 0;
  double worst = 0.0;
  void add(double analytic, double numeric) {
    ++probes;
    worst = std::max(worst, relative_error(analytic, numeric, 1e-10));
  }
};

// Probes random disparity entries. `eval` returns the scalar objective
// for a disparity tensor; `analytic` holds its gradient.
void probe_disparity(const TensorD& disp, const TensorD& analytic, AngularOffset delta,
                     const std::function<double(const TensorD&)>& eval, std::uint64_t seed, int want,
                     ProbeStats& stats, const std::function<bool(int, int)>& skip = {}) {
  const int h = disp.height(), w = disp.width();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> py(0, h - 1), px(0, w - 1), pc(0, 1);
  // eps * |delta| stays below the 1e-3 kink margin, so each probe remains in
  // one bilinear cell where the warp is linear in D.
  const double eps = 1e-4;
  int taken = 0;
  for (int attempts = 0; taken < want && attempts < 100 * want; ++attempts) {
    const int y = py(rng), x = px(rng), ch = pc(rng);
    const double step = ch == 0 ? delta.du : delta.dv;
    if (step == 0) continue;
    const double coord = (ch == 0 ? x : y) + step * disp(0, ch, y, x);
    const double limit = ch == 0 ? w - 1 : h - 1;
    if (kink_distance(coord) < 1e-3 || coord < 1e-3 || coord > limit - 1e-3) continue;
    if (skip && skip(y, x)) continue;
    TensorD plus = disp, minus = disp;
    plus(0, ch, y, x) += eps;
    minus(0, ch, y, x) -= eps;
    const double numeric = (eval(plus) - eval(minus)) / (2 * eps);
    stats.add(analytic(0, ch, y, x), numeric);
    ++taken;
  }
}

void gradient_suite(Checks& c) {
  const int h = 24, w = 24, ch = 3;
  const AngularOffset delta{-2, 1};
  const TensorD src = smooth_image(ch, h, w, 7);
  const TensorD disp = to_double(random_tensor(1, 2, h, w, 8, -2.5f, 2.5f));

  auto warp = [&](const TensorD& d) {
    TensorD out(1, ch, h, w);
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(h) * w);
    geometry_ops::warp_forward(src.data(), ch, h, w, d.data(), delta, out.data(), valid.data());
    return out;
  };

  // warp_view w.r.t. disparity: J = sum(weights * warp(D)).
  {
    const TensorD weights = to_double(random_tensor(1, ch, h, w, 9, -1.0f, 1.0f));
    auto objective = [&](const TensorD& d) {
      const TensorD out = warp(d);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += weights.data()[i] * out.data()[i];
      return s;
    };
    TensorD grad(1, 2, h, w);
    grad.fill(0.0);
    geometry_ops::warp_backward(src.data(), ch, h, w, disp.data(), delta, weights.data(), static_cast<double*>(nullptr), grad.data());
    ProbeStats s;
    probe_disparity(disp, grad, delta, objective, 10, 120, s);
    c.expect(s.probes >= 100 && s.worst < 1e-4,
             "warp: " + std::to_string(s.probes) + " probes, worst " + fmt_sci(s.worst));
    c.note("warp " + std::to_string(s.probes) + " probes worst " + fmt_sci(s.worst));
  }

  // warping loss mean |warp(I_c, D) - L_i| w.r.t. disparity.
  {
    const TensorD target = to_double(random_tensor(1, ch, h, w, 11, 0.1f, 0.9f));
    auto objective = [&](const TensorD& d) { return objective_ops::l1_mean(warp(d), target); };
    const TensorD out = warp(disp);
    TensorD gout(1, ch, h, w), grad(1, 2, h, w);
    gout.fill(0.0);
    grad.fill(0.0);
    objective_ops::l1_mean(out, target, &gout);
    geometry_ops::warp_backward(src.data(), ch, h, w, disp.data(), delta, gout.data(), static_cast<double*>(nullptr), grad.data());
    // Pixels with a residual near 0 sit on the L1 kink.
    auto on_kink = [&](int y, int x) {
      for (int k = 0; k < ch; ++k)
        if (std::abs(out(0, k, y, x) - target(0, k, y, x)) < 1e-3) return true;
      return false;
    };
    ProbeStats s;
    probe_disparity(disp, grad, delta, objective, 12, 140, s, on_kink);
    c.expect(s.probes >= 100 && s.worst < 1e-4,
             "warping loss: " + std::to_string(s.probes) + " probes, worst " + fmt_sci(s.worst));
    c.note("warping loss " + std::to_string(s.probes) + " probes worst " + fmt_sci(s.worst));
  }

  // reconstruction loss alpha * L1 + beta * (1 - SSIM) w.r.t. the reconstruction.
  {
    const LossConfig cfg;
    const int views = 2, rh = 20, rw = 20;
    const TensorD target = to_double(random_tensor(views, 3, rh, rw, 13, 0.05f, 0.95f));
    TensorD recon = target;
    const TensorD noise = to_double(random_tensor(views, 3, rh, rw, 14, -0.2f, 0.2f));
    for (std::size_t i = 0; i < recon.size(); ++i) recon.data()[i] += noise.data()[i];
    auto objective = [&](const TensorD& r) {
      return cfg.alpha * objective_ops::l1_mean(r, target) + cfg.beta * (1.0 - objective_ops::ssim_mean(r, target));
    };
    TensorD grad(views, 3, rh, rw);
    grad.fill(0.0);
    objective_ops::l1_mean(recon, target, &grad, cfg.alpha);
    objective_ops::ssim_mean(recon, target, &grad, -cfg.beta);
    std::mt19937_64 rng(15);
    std::uniform_int_distribution<std::size_t> pick(0, recon.size() - 1);
    const double eps = 1e-6;
    ProbeStats s;
    while (s.probes < 120) {
      const std::size_t i = pick(rng);
      if (std::abs(recon.data()[i] - target.data()[i]) < 1e-3) continue;
      TensorD plus = recon, minus = recon;
      plus.data()[i] += eps;
      minus.data()[i] -= eps;
      s.add(grad.data()[i], (objective(plus) - objective(minus)) / (2 * eps));
    }
    c.expect(s.worst < 1e-4, "reconstruction loss: worst " + fmt_sci(s.worst));
    c.note("reconstruction loss " + std::to_string(s.probes) + " probes worst " + fmt_sci(s.worst));
  }
}

// ---- criterion 3 ---------------------------------------------------------------

std::vector<DisparityMap> constant_maps(int count, int h, int w, const std::vector<std::pair<float, float>>& v) {
  std::vector<DisparityMap> maps;
  for (int i = 0; i < count; ++i) maps.push_back(DisparityMap::constant(h, w, v[i].first, v[i].second));
  return maps;
}

void loss_suite(Checks& c) {
  const double tol = 1e-6;
  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::abs(got - want) <= tol, what + ": got " + fmt_double(got, 8) + ", want " + fmt_double(want, 8));
  };
  const GridShape g{3, 3};

  // Warping loss.
  const Tensor target = random_tensor(9, 3, 16, 16, 21, 0.1f, 0.8f);
  const LightField lf(g, target);
  near(warping_loss(target, lf), 0.0, "warping loss, identical");
  Tensor offset = target;
  for (float& v : offset.values()) v += 0.1f;
  near(warping_loss(offset, lf), 0.1, "warping loss, +0.1");
  Tensor half = target;
  for (int n = 0; n < half.batch(); ++n)
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 8; ++x) half(n, ch, y, x) += 0.2f;
  near(warping_loss(half, lf), 0.1, "warping loss, half the pixels +0.2");

  // Disparity regularity.
  near(disparity_regularity_loss(constant_maps(9, 8, 8, std::vector<std::pair<float, float>>(9, {0.8f, -0.3f})), g),
       0.0, "regularity, equal constant maps");
  near(disparity_regularity_loss(constant_maps(2, 8, 8, {{0.6f, 0.0f}, {1.0f, 0.0f}}), {1, 2}), 0.4,
       "regularity, 1 vs 0.6");
  near(disparity_regularity_loss(constant_maps(1, 8, 8, {{2.0f, 1.0f}}), {1, 1}), 0.0, "regularity, 1x1 grid");

  // Reconstruction.
  near(reconstruction_loss(lf, lf), 0.0, "reconstruction, identical");
  LossConfig l1_only;
  l1_only.alpha = 1.0;
  l1_only.beta = 0.0;
  Tensor plus05 = target;
  for (float& v : plus05.values()) v += 0.05f;
  near(reconstruction_loss(LightField(g, plus05), lf, l1_only), 0.05, "reconstruction, +0.05 with beta 0");
  LossConfig ssim_only;
  ssim_only.alpha = 0.0;
  ssim_only.beta = 0.02;
  near(reconstruction_loss(lf, lf, ssim_only), 0.0, "reconstruction, identical with alpha 0");
  Tensor binary = random_tensor(9, 3, 16, 16, 22);
  for (float& v : binary.values()) v = v < 0.5f ? 0.0f : 1.0f;
  Tensor inverted = binary;
  for (float& v : inverted.values()) v = 1.0f - v;
  const double expected = 0.02 * (1.0 - ssim_oracle(inverted, binary));
  const double got = reconstruction_loss(LightField(g, inverted), LightField(g, binary), ssim_only);
  c.expect(expected > 0.0, "inverted binary image gives zero SSIM loss in the oracle");
  near(got, expected, "reconstruction, inverted binary image");

  // Total.
  near(total_loss(1, 1, 1).total, 1.51, "total (1,1,1)");
  near(total_loss(0, 0, 0).total, 0.0, "total (0,0,0)");
  const double a = 0.37, b = 1.9, r = 0.041;
  near(total_loss(2 * a, 2 * b, 2 * r).total, 2 * total_loss(a, b, r).total, "total linearity");
  c.note("warping, regularity, reconstruction and total closed forms within 1e-6");
}

// ---- criterion 4 ---------------------------------------------------------------

void metric_suite(Checks& c) {
  const Tensor a = random_tensor(1, 3, 32, 32, 31, 0.0f, 0.9f);
  c.expect(psnr(a, a) == 99.0, "psnr of identical images is " + fmt_double(psnr(a, a)));
  const double s_same = ssim(a, a);
  c.expect(std::abs(s_same - 1.0) < 1e-9, "ssim of identical images is " + fmt_double(s_same, 10));
  const LightField lf = synthetic::constant_disparity({3, 3}, 32, 32, 1.0, 32);
  c.expect(psnr(lf, lf) == 99.0 && std::abs(ssim(lf, lf) - 1.0) < 1e-9, "light-field fixed points");

  Tensor b = a;
  for (float& v : b.values()) v += 0.1f;
  const double p20 = psnr(a, b);
  c.expect(std::abs(p20 - 20.0) < 1e-4, "MSE 0.01 gives " + fmt_double(p20, 6) + " dB");

  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Tensor x = random_tensor(1, 3, 24, 24, 1000 + 2 * k);
    const Tensor y = random_tensor(1, 3, 24, 24, 1001 + 2 * k);
    worst = std::max(worst, std::abs(ssim(x, y) - ssim(y, x)));
  }
  c.expect(worst < 1e-9, "ssim asymmetry " + fmt_sci(worst));
  c.note("MSE 0.01 -> " + fmt_double(p20, 6) + " dB, ssim asymmetry " + fmt_sci(worst));
}

// ---- training-based criteria -----------------------------------------------------

ModelConfig desk_model() {
  ModelConfig m;
  m.feature_channels = 8;
  m.encoder_width = 8;
  m.sepnet_width = 32;
  m.dispnet_width = 8;
  m.fusion_width = 8;
  return m;
}

TrainConfig desk_train() {
  TrainConfig t;
  t.patch_size = 32;
  t.patches_per_lf = 64;
  t.stage1_iters = 500;
  t.stage2_iters = 2000;
  t.batch_size = 1;
  t.learning_rate = 1e-3;
  t.augment = false;
  t.edit_probability = 0.5;
  return t;
}

double median(std::vector<float> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Central-view luma gradient magnitude above `threshold`, away from the border.
std::vector<std::uint8_t> textured_mask(const Tensor& central, float threshold, int margin) {
  const int h = central.height(), w = central.width();
  auto luma = [&](int y, int x) {
    return 0.299f * central(0, 0, y, x) + 0.587f * central(0, 1, y, x) + 0.114f * central(0, 2, y, x);
  };
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(h) * w, 0);
  for (int y = margin; y < h - margin; ++y)
    for (int x = margin; x < w - margin; ++x) {
      const float gx = 0.5f * (luma(y, x + 1) - luma(y, x - 1));
      const float gy = 0.5f * (luma(y + 1, x) - luma(y - 1, x));
      mask[static_cast<std::size_t>(y) * w + x] = std::hypot(gx, gy) > threshold;
    }
  return mask;
}

double vertical_slope(const LightField& lf) {
  const int w = lf.width();
  double acc = 0.0;
  int n = 0;
  for (int x = w / 4; x < 3 * w / 4; x += std::max(1, w / 16)) {
    acc += epi_slope(extract_epi(lf, {EpiMode::kVertical, lf.grid().center().u, x}));
    ++n;
  }
  return acc / n;
}

struct OverfitRun {
  LightField lf;
  ModelParams params;
  bool trained = false;
  int stage1_steps_checked = 0;
  bool stage1_fusion_unchanged = true;
};

void overfit_criterion(Checks& c, OverfitRun& run) {
  const ModelConfig mc = desk_model();
  const TrainConfig tc = desk_train();
  run.lf = synthetic::constant_disparity({7, 7}, 64, 64, 1.0, 1);
  const ModelParams init(mc, tc.seed);
  std::vector<Tensor> fusion0;
  for (const auto* e : init.group("fusion.")) fusion0.push_back(e->var.value());
  TrainOutputs out;
  out.on_step = [&](const StepRecord& rec, const ModelParams& p) {
    if (rec.stage != 1) return;
    ++run.stage1_steps_checked;
    const auto fusion = p.group("fusion.");
    for (std::size_t k = 0; k < fusion.size(); ++k)
      run.stage1_fusion_unchanged &= fusion[k]->var.value() == fusion0[k];
  };
  run.params = train(prepare_dataset({run.lf}, tc), mc, tc, out).params;
  run.trained = true;

  const MetaChannel z = encode(run.lf, run.params);
  const DecodeDetail det = decode_detailed(z, VisualChannels(run.lf.central_view()), run.params);
  const double p = psnr(det.lightfield, run.lf);
  c.expect(p > 35.0, "PSNR " + fmt_double(p, 3) + " dB <= 35 dB");

  const GridShape g = run.lf.grid();
  const AngularIndex ctr = g.center();
  const auto mask = textured_mask(run.lf.central_view(), 0.02f, 4);
  const std::size_t plane = static_cast<std::size_t>(64) * 64;
  std::vector<float> samples;
  for (int i = 0; i < g.count(); ++i) {
    const AngularIndex a = g.at(i);
    if (a == ctr) continue;
    for (int ch = 0; ch < 2; ++ch) {
      if ((ch == 0 ? a.u - ctr.u : a.v - ctr.v) == 0) continue;  // component unused by the warp
      const float* d = det.disparity.plane(i, ch);
      for (std::size_t q = 0; q < plane; ++q)
        if (mask[q]) samples.push_back(d[q]);
    }
  }
  const double med = median(samples);
  c.expect(std::abs(med - 1.0) <= 0.2, "median disparity " + fmt_double(med, 3));

  const double sh_gt = lightfield_slope(run.lf), sh = lightfield_slope(det.lightfield);
  const double sv_gt = vertical_slope(run.lf), sv = vertical_slope(det.lightfield);
  c.expect(std::abs(sh - sh_gt) <= 0.2, "horizontal EPI slope " + fmt_double(sh, 3) + " vs " + fmt_double(sh_gt, 3));
  c.expect(std::abs(sv - sv_gt) <= 0.2, "vertical EPI slope " + fmt_double(sv, 3) + " vs " + fmt_double(sv_gt, 3));
  c.note("PSNR " + fmt_double(p, 3) + " dB, median disparity " + fmt_double(med, 3) + " over " +
         std::to_string(samples.size()) + " samples, EPI slope h " + fmt_double(sh, 3) + "/" + fmt_double(sh_gt, 3) +
         " v " + fmt_double(sv, 3) + "/" + fmt_double(sv_gt, 3));
}

void edit_criterion(Checks& c, const OverfitRun& run) {
  c.expect(run.trained, "overfit model unavailable");
  if (!run.trained) return;
  const MetaChannel z = encode(run.lf, run.params);
  const double base = psnr(decode(z, VisualChannels(run.lf.central_view()), run.params), run.lf);
  std::string detail = "unedited " + fmt_double(base, 3) + " dB";
  for (double degrees : {20.0, -20.0}) {
    const EditOperator hue{EditKind::kHue, degrees};
    const LightField edited_gt = hue.apply(run.lf);
    const double p = psnr(decode(z, VisualChannels(hue.apply(run.lf.central_view())), run.params), edited_gt);
    c.expect(p >= base - 1.5, "hue " + fmt_double(degrees, 0) + " deg: " + fmt_double(p, 3) + " dB vs unedited " +
                                  fmt_double(base, 3) + " dB");
    detail += ", hue " + fmt_double(degrees, 0) + " deg " + fmt_double(p, 3) + " dB";
  }
  c.note(detail);
}

void pipeline_criterion(Checks& c, const OverfitRun& run) {
  TempDir tmp("lfedit-accept");
  // Zero-parallax light field of 8-bit representable values, stored as PNGs.
  const Tensor image = io::quantize8(random_tensor(1, 3, 32, 48, 41));
  const LightField lf = LightField::tiled({5, 5}, image);
  io::save_lightfield(lf, tmp / "lf");
  io::write_png(tmp / "central.png", lf.central_view());
  cli::CodecOptions opt;
  opt.bypass = true;
  const cli::RoundtripReport rt = cli::cmd_roundtrip(tmp / "lf", tmp / "central.png", opt, std::nullopt);
  bool all_99 = true;
  for (const auto* rep : {&rt.with_edit, &rt.no_edit})
    for (const auto& s : rep->scenes)
      for (double v : s.view_psnr) all_99 &= v == 99.0;
  c.expect(all_99, "bypass round trip is not exact on every view");
  c.expect(bypass_decode(VisualChannels(lf.central_view()), lf.grid()) == lf, "bypass decode differs from L");

  Representation rep;
  rep.visual = VisualChannels(image);
  rep.meta = MetaChannel(random_tensor(1, 2, 32, 48, 42, -3.0f, 3.0f));
  rep.manifest.grid = {7, 5};
  rep.manifest.model_version = "acceptance";
  rep.manifest.meta_channels = 2;
  rep.manifest.height = 32;
  rep.manifest.width = 48;
  io::write_representation(rep, tmp / "rep");
  const Representation back = io::read_representation(tmp / "rep");
  c.expect(back.visual == rep.visual, "representation visual channels changed");
  c.expect(back.meta == rep.meta, "representation meta channel changed");
  c.expect(back.manifest.grid == rep.manifest.grid && back.manifest.model_version == rep.manifest.model_version &&
               back.manifest.meta_channels == 2 && back.manifest.height == 32 && back.manifest.width == 48,
           "representation manifest changed");

  c.expect(run.trained && run.stage1_steps_checked == desk_train().stage1_iters,
           "stage-1 steps observed: " + std::to_string(run.stage1_steps_checked));
  c.expect(run.stage1_fusion_unchanged, "FusionNet parameters changed during stage 1");
  c.note("bypass round trip exact, container lossless, fusion unchanged over " +
         std::to_string(run.stage1_steps_checked) + " stage-1 steps");
}

double masked_psnr(const Tensor& a, const Tensor& b, const Tensor& band, long& samples) {
  double sse = 0.0;
  samples = 0;
  for (int v = 0; v < a.batch(); ++v)
    for (int ch = 0; ch < a.channels(); ++ch)
      for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
          if (band(v, 0, y, x) > 0.5f) {
            const double d = double(a(v, ch, y, x)) - double(b(v, ch, y, x));
            sse += d * d;
            ++samples;
          }
  if (samples == 0) return std::numeric_limits<double>::quiet_NaN();
  const double mse = sse / samples;
  return mse < 1e-10 ? 99.0 : 10.0 * std::log10(1.0 / mse);
}

void occlusion_criterion(Checks& c) {
  const auto scene = synthetic::two_plane({7, 7}, 64, 64, -1.0, 1.0, 24, 40, 7);
  const TrainConfig tc = desk_train();
  const ModelParams params = train(prepare_dataset({scene.lightfield}, tc), desk_model(), tc).params;
  const MetaChannel z = encode(scene.lightfield, params);
  const DecodeDetail det = decode_detailed(z, VisualChannels(scene.lightfield.central_view()), params);
  long n_fused = 0, n_warped = 0;
  const double fused = masked_psnr(det.lightfield.views(), scene.lightfield.views(), scene.band, n_fused);
  const double warped = masked_psnr(det.warped, scene.lightfield.views(), scene.band, n_warped);
  c.expect(n_fused > 0, "empty occlusion band");
  c.expect(fused > warped, "band PSNR fused " + fmt_double(fused, 3) + " dB <= warped " + fmt_double(warped, 3) + " dB");
  c.note("band PSNR fused " + fmt_double(fused, 3) + " dB vs warped " + fmt_double(warped, 3) + " dB over " +
         std::to_string(n_fused) + " samples");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  bool ok = true;
  OverfitRun run;
  ok &= run_criterion(1, "geometry oracles", 10, geometry_suite);
  ok &= run_criterion(2, "gradient checks", 60, gradient_suite);
  ok &= run_criterion(3, "loss closed forms", 5, loss_suite);
  ok &= run_criterion(4, "metric fixed points", 10, metric_suite);
  ok &= run_criterion(5, "synthetic overfit", 4 * 3600, [&](Checks& c) { overfit_criterion(c, run); });
  ok &= run_criterion(6, "hue edit propagation", 0, [&](Checks& c) { edit_criterion(c, run); });
  ok &= run_criterion(7, "pipeline round trip", 0, [&](Checks& c) { pipeline_criterion(c, run); });
  ok &= run_criterion(8, "occlusion recovery", 0, occlusion_criterion);
  std::printf("acceptance: %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}
