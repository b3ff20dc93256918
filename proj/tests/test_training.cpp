// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "lfedit/epi.hpp"
#include "lfedit/errors.hpp"
#include "lfedit/synthetic.hpp"
#include "lfedit/training.hpp"
#include "support/test_support.hpp"

using namespace lfedit;
using namespace lfedit::testing;

namespace {

ModelConfig small_model(GridShape grid = {3, 3}) {
  ModelConfig c;
  c.grid = grid;
  c.feature_channels = 6;
  c.encoder_width = 6;
  c.encoder_levels = 3;
  c.sepnet_width = 16;
  c.sepnet_blocks = 2;
  c.dispnet_width = 8;
  c.dispnet_layers = 4;
  c.fusion_width = 8;
  c.fusion_blocks = 2;
  return c;
}

TrainConfig quick_train(int stage1, int stage2) {
  TrainConfig t;
  t.patch_size = 32;
  t.patches_per_lf = 16;
  t.stage1_iters = stage1;
  t.stage2_iters = stage2;
  t.batch_size = 1;
  t.learning_rate = 1e-3;
  t.checkpoint_interval = 0;
  return t;
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

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("train config") {
  TEST_CASE("learning-rate schedule") {
    TrainConfig c;
    c.stage2_iters = 50000;
    CHECK(learning_rate_at(c, 1, 1) == 2e-4);
    CHECK(learning_rate_at(c, 1, 9999) == 2e-4);
    CHECK(learning_rate_at(c, 2, 0) == doctest::Approx(2e-4).epsilon(1e-12));
    CHECK(learning_rate_at(c, 2, 25000) == doctest::Approx(2e-4 * (1 - 0.99 * 0.5)).epsilon(1e-12));
    CHECK(learning_rate_at(c, 2, 50000) == doctest::Approx(2e-6).epsilon(1e-12));
    CHECK_THROWS_AS(learning_rate_at(c, 3, 1), ContractError);
    CHECK_THROWS_AS(learning_rate_at(c, 2, 50001), ContractError);
  }

  TEST_CASE("JSON round trip and validation") {
    TrainConfig c = quick_train(3, 4);
    c.edit_ranges.hue_degrees = {-10, 12};
    c.loss.beta = 0.3;
    const TrainConfig d = train_config_from_json(to_json(c));
    CHECK(to_json(d) == to_json(c));
    CHECK_THROWS_AS(train_config_from_json({{"learning_rate", -1.0}}), ContractError);
    CHECK_THROWS_AS(train_config_from_json({{"edit_probability", 1.5}}), ContractError);
    CHECK_THROWS_AS(train_config_from_json({{"patch_size", "big"}}), ContractError);
    CHECK_THROWS_AS(train_config_from_json({{"stage1_iters", 0}, {"stage2_iters", 0}}), ContractError);
  }
}

TEST_SUITE("augmentation") {
  TEST_CASE("horizontal flip keeps the epipolar slope") {
    // Mirroring x and reversing u negate both axes of a horizontal EPI, which
    // leaves its slope unchanged.
    for (double d : {1.0, -2.0}) {
      const LightField lf = synthetic::constant_disparity({5, 5}, 48, 48, d, 3);
      CHECK(lightfield_slope(lf) == doctest::Approx(d).epsilon(0.02));
      const LightField f = flip_horizontal(lf);
      CHECK(lightfield_slope(f) == doctest::Approx(d).epsilon(0.02));
      CHECK(vertical_slope(f) == doctest::Approx(d).epsilon(0.02));
    }
  }

  TEST_CASE("rotation keeps both epipolar slopes") {
    const LightField lf = synthetic::constant_disparity({5, 5}, 48, 48, 1.0, 4);
    const LightField r = rotate180(lf);
    CHECK(lightfield_slope(r) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(vertical_slope(r) == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("flip and rotation are involutions") {
    const LightField lf({3, 5}, random_tensor(15, 3, 7, 9, 5));
    CHECK(rotate180(rotate180(lf)) == lf);
    CHECK(flip_horizontal(flip_horizontal(lf)) == lf);
    CHECK_FALSE(rotate180(lf) == lf);
    CHECK(apply_transform(lf, PatchTransform::kIdentity) == lf);
  }

  TEST_CASE("flip maps view (v,u) to the mirrored view (v,N-1-u)") {
    const LightField lf({3, 5}, random_tensor(15, 3, 4, 6, 6));
    const LightField f = flip_horizontal(lf);
    CHECK(f.views()(f.grid().index({1, 0}), 2, 3, 0) == lf.views()(lf.grid().index({1, 4}), 2, 3, 5));
    const LightField r = rotate180(lf);
    CHECK(r.views()(r.grid().index({0, 1}), 0, 0, 2) == lf.views()(lf.grid().index({2, 3}), 0, 3, 3));
  }

  TEST_CASE("crop takes the same window from every view") {
    const LightField lf({3, 3}, random_tensor(9, 3, 10, 12, 7));
    const LightField c = crop(lf, 2, 3, 5, 4);
    CHECK(c.height() == 5);
    CHECK(c.width() == 4);
    for (int i = 0; i < 9; ++i) CHECK(c.views()(i, 1, 4, 3) == lf.views()(i, 1, 6, 6));
    CHECK_THROWS_AS(crop(lf, 6, 0, 5, 4), ContractError);
  }
}

TEST_SUITE("dataset") {
  TEST_CASE("deterministic in the seed") {
    const std::vector<LightField> lfs{synthetic::constant_disparity({3, 3}, 48, 40, 1.0, 1)};
    TrainConfig c = quick_train(1, 1);
    c.patch_size = 24;
    const auto a = prepare_dataset(lfs, c), b = prepare_dataset(lfs, c);
    CHECK(dataset_manifest(a, c) == dataset_manifest(b, c));
    c.seed = 99;
    CHECK_FALSE(dataset_manifest(prepare_dataset(lfs, c), c) == dataset_manifest(a, c));
  }

  TEST_CASE("textureless crops are dropped and small light fields skipped") {
    const LightField flat = LightField::tiled({3, 3}, Tensor(1, 3, 40, 40, 0.5f));
    const LightField textured = synthetic::constant_disparity({3, 3}, 40, 40, 1.0, 2);
    const LightField small = synthetic::constant_disparity({3, 3}, 20, 40, 1.0, 3);
    TrainConfig c = quick_train(1, 1);
    const auto ds = prepare_dataset({flat, textured, small}, c);
    CHECK(ds.size() == 16);
    for (const auto& p : ds) {
      CHECK(p.source == 1);
      CHECK(p.average_gradient >= c.texture_threshold);
      CHECK(p.lf.height() == 32);
    }
  }

  TEST_CASE("each patch equals the transformed crop recorded in the manifest") {
    const LightField lf = synthetic::constant_disparity({3, 3}, 48, 48, 1.0, 4);
    TrainConfig c = quick_train(1, 1);
    c.patches_per_lf = 30;
    const auto ds = prepare_dataset({lf}, c);
    const auto m = dataset_manifest(ds, c);
    REQUIRE(m.at("patches").size() == ds.size());
    std::set<std::string> seen;
    for (std::size_t k = 0; k < ds.size(); ++k) {
      const auto& e = m.at("patches")[k];
      seen.insert(e.at("transform").get<std::string>());
      CHECK(apply_transform(crop(lf, e.at("y0"), e.at("x0"), 32, 32), ds[k].transform) == ds[k].lf);
    }
    CHECK(seen.size() == 3);
    c.augment = false;
    for (const auto& p : prepare_dataset({lf}, c)) CHECK(p.transform == PatchTransform::kIdentity);
  }
}

TEST_SUITE("edit pairs") {
  TEST_CASE("identity operators and probability zero leave the pair unchanged") {
    const LightField lf({3, 3}, random_tensor(9, 3, 6, 6, 1));
    for (EditKind k : {EditKind::kHue, EditKind::kSaturation, EditKind::kExposure, EditKind::kContrast}) {
      CHECK(EditOperator::identity(k).is_identity());
      CHECK(EditOperator::identity(k).apply(lf) == lf);
    }
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
      const EditPair p = sample_edit_pair(lf, 0.0, {}, rng);
      CHECK_FALSE(p.edit.has_value());
      CHECK(p.target == lf);
      CHECK(p.visual.image() == lf.central_view());
    }
  }

  TEST_CASE("exposure on a constant patch") {
    const LightField lf = LightField::tiled({3, 3}, Tensor(1, 3, 4, 4, 0.6f));
    const LightField lit = EditOperator{EditKind::kExposure, 1.25}.apply(lf);
    for (float v : lit.views().values())
      REQUIRE(v == doctest::Approx(0.75).epsilon(1e-6));
    const LightField bright = LightField::tiled({3, 3}, Tensor(1, 3, 4, 4, 0.9f));
    const LightField clipped = EditOperator{EditKind::kExposure, 1.25}.apply(bright);
    for (float v : clipped.views().values()) REQUIRE(v == 1.0f);
  }

  TEST_CASE("contrast and saturation closed forms") {
    Tensor px(1, 3, 1, 1);
    px(0, 0, 0, 0) = 0.2f, px(0, 1, 0, 0) = 0.5f, px(0, 2, 0, 0) = 0.7f;
    const Tensor c = EditOperator{EditKind::kContrast, 0.8}.apply(px);
    CHECK(c(0, 0, 0, 0) == doctest::Approx(0.26).epsilon(1e-6));
    CHECK(c(0, 2, 0, 0) == doctest::Approx(0.66).epsilon(1e-6));
    const double y = 0.299 * 0.2 + 0.587 * 0.5 + 0.114 * 0.7;
    const Tensor s = EditOperator{EditKind::kSaturation, 0.0}.apply(px);
    for (int ch = 0; ch < 3; ++ch) CHECK(s(0, ch, 0, 0) == doctest::Approx(y).epsilon(1e-5));
  }

  TEST_CASE("hue rotation preserves Rec.601 luma on 100 random pixels") {
    const Tensor img = random_tensor(1, 3, 10, 10, 3, 0.25f, 0.75f);
    for (double deg : {-30.0, 12.5, 30.0}) {
      const Tensor out = EditOperator{EditKind::kHue, deg}.apply(img);
      for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
          const float a = luma601(img(0, 0, y, x), img(0, 1, y, x), img(0, 2, y, x));
          const float b = luma601(out(0, 0, y, x), out(0, 1, y, x), out(0, 2, y, x));
          REQUIRE(std::abs(a - b) < 1.0f / 512);
        }
      CHECK(max_abs_diff(out, img) > 0.01);
    }
  }

  TEST_CASE("hue rotations compose") {
    const Tensor img = random_tensor(1, 3, 6, 6, 4, 0.3f, 0.7f);
    const Tensor twice = EditOperator{EditKind::kHue, 10}.apply(EditOperator{EditKind::kHue, 15}.apply(img));
    CHECK(max_abs_diff(twice, EditOperator{EditKind::kHue, 25}.apply(img)) < 1e-5);
  }

  TEST_CASE("sampled pairs are view-consistent and within range") {
    const LightField lf({3, 3}, random_tensor(9, 3, 5, 5, 5));
    std::mt19937_64 rng(6);
    const EditRanges ranges;
    std::set<EditKind> kinds;
    for (int t = 0; t < 200; ++t) {
      const EditPair p = sample_edit_pair(lf, 1.0, ranges, rng);
      REQUIRE(p.edit.has_value());
      const EditOperator g = *p.edit;
      kinds.insert(g.kind);
      const Range r = g.kind == EditKind::kHue          ? ranges.hue_degrees
                      : g.kind == EditKind::kSaturation ? ranges.saturation
                      : g.kind == EditKind::kExposure   ? ranges.exposure
                                                        : ranges.contrast;
      CHECK(g.parameter >= r.lo);
      CHECK(g.parameter <= r.hi);
      for (int i = 0; i < 9; ++i)
        REQUIRE(p.target.views().slice_batch(i, 1) == g.apply(lf.views().slice_batch(i, 1)));
      CHECK(p.visual.image() == g.apply(lf.central_view()));
    }
    CHECK(kinds.size() == 4);
  }

  TEST_CASE("edit probability is respected") {
    const LightField lf({1, 1}, random_tensor(1, 3, 2, 2, 7));
    std::mt19937_64 rng(8);
    int edited = 0;
    for (int t = 0; t < 2000; ++t) edited += sample_edit_pair(lf, 0.5, {}, rng).edit.has_value();
    CHECK(edited > 900);
    CHECK(edited < 1100);
  }

  TEST_CASE("edit kind names") {
    CHECK(edit_kind_from_string("hue") == EditKind::kHue);
    CHECK(to_string(EditKind::kContrast) == "contrast");
    CHECK_THROWS_AS(edit_kind_from_string("sepia"), ContractError);
  }
}

TEST_SUITE("optimizer") {
  TEST_CASE("Adam matches a hand-written update") {
    ModelParams p(small_model(), 1);
    auto& entry = p.entries().front();
    const Tensor w0 = entry.var.value();
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double grads[3] = {0.5, -2.0, 1e-3};
    Adam adam(b1, b2, eps);
    double m = 0, v = 0, w = w0.data()[0];
    for (int t = 1; t <= 3; ++t) {
      entry.var.zero_grad();
      entry.var.node()->grad_buffer().fill(static_cast<float>(grads[t - 1]));
      adam.step(p, lr);
      m = b1 * m + (1 - b1) * grads[t - 1];
      v = b2 * v + (1 - b2) * grads[t - 1] * grads[t - 1];
      w -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
      CHECK(entry.var.value().data()[0] == doctest::Approx(w).epsilon(1e-6));
    }
    CHECK(adam.steps() == 3);
    CHECK(p.entries()[1].var.value() == ModelParams(small_model(), 1).entries()[1].var.value());
  }
}

TEST_SUITE("training") {
  TEST_CASE("smoke run converges") {
    const std::vector<LightField> lfs{synthetic::constant_disparity({3, 3}, 48, 48, 1.0, 11)};
    const TrainConfig c = quick_train(200, 800);
    const TrainResult r = train(prepare_dataset(lfs, c), small_model(), c);
    REQUIRE(r.log.size() == 1000);
    const double initial = r.log.front().loss.total;
    const double final_loss = r.log.back().loss.total;
    MESSAGE("initial " << initial << " final " << final_loss);
    CHECK(final_loss < 0.1 * initial);

    std::vector<double> ma;
    double window = 0.0;
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      window += r.log[i].loss.total;
      if (i >= 100) window -= r.log[i - 100].loss.total;
      if (i >= 99) ma.push_back(window / 100.0);
    }
    const std::size_t half = r.log.size() / 2 - 99;
    double lowest = ma[half];
    for (std::size_t i = half; i < ma.size(); ++i) {
      REQUIRE(ma[i] <= 1.05 * lowest);
      lowest = std::min(lowest, ma[i]);
    }

    for (const auto& rec : r.log) {
      REQUIRE(std::isfinite(rec.loss.total));
      REQUIRE(rec.loss.per_view_warping.size() == 9);
      if (rec.stage == 1) REQUIRE(rec.edits == std::vector<std::string>{"none"});
    }
  }

  TEST_CASE("stage 1 leaves FusionNet untouched; stage 2 trains it") {
    const std::vector<LightField> lfs{synthetic::constant_disparity({3, 3}, 32, 32, 1.0, 12)};
    TrainConfig c = quick_train(15, 15);
    c.edit_probability = 1.0;
    const ModelParams init(small_model(), c.seed);
    std::vector<Tensor> fusion0;
    for (const auto* e : init.group("fusion.")) fusion0.push_back(e->var.value());
    int stage1_checks = 0;
    bool stage2_changed = false, others_changed = false;
    TrainOutputs out;
    out.on_step = [&](const StepRecord& rec, const ModelParams& p) {
      const auto fusion = p.group("fusion.");
      bool same = true;
      for (std::size_t k = 0; k < fusion.size(); ++k) same &= fusion[k]->var.value() == fusion0[k];
      if (rec.stage == 1) {
        ++stage1_checks;
        CHECK(same);
        others_changed |= !(p.at("dispnet.conv0.weight").value() == init.at("dispnet.conv0.weight").value());
      } else {
        stage2_changed |= !same;
        CHECK(rec.edits.front() != "none");
      }
    };
    train(prepare_dataset(lfs, c), small_model(), c, out);
    CHECK(stage1_checks == 15);
    CHECK(others_changed);
    CHECK(stage2_changed);
  }

  TEST_CASE("identical seeds give bit-identical checkpoints and logs") {
    const TempDir dir;
    const std::vector<LightField> lfs{synthetic::constant_disparity({3, 3}, 40, 40, 1.0, 13)};
    TrainConfig c = quick_train(6, 6);
    c.checkpoint_interval = 4;
    const auto ds = prepare_dataset(lfs, c);
    const auto run = [&](const std::string& name) {
      TrainOutputs out{dir / name / "log.jsonl", dir / name, {}};
      return train(ds, small_model(), c, out);
    };
    const TrainResult a = run("a"), b = run("b");
    CHECK(a.params == b.params);
    CHECK(read_bytes(dir / "a" / "final.ckpt") == read_bytes(dir / "b" / "final.ckpt"));
    CHECK(read_bytes(dir / "a" / "latest.ckpt") == read_bytes(dir / "b" / "latest.ckpt"));
    CHECK(load_checkpoint(dir / "a" / "final.ckpt") == a.params);

    nlohmann::json meta;
    load_checkpoint(dir / "a" / "latest.ckpt", &meta);
    CHECK(meta.at("global_step") == 12);

    std::ifstream log(dir / "a" / "log.jsonl");
    int lines = 0;
    for (std::string line; std::getline(log, line); ++lines) {
      const auto j = nlohmann::json::parse(line);
      for (const char* key : {"stage", "step", "lr", "total", "warping", "disparity_reg", "reconstruction",
                              "per_view_warping", "per_view_reconstruction", "edits"})
        CHECK(j.contains(key));
    }
    CHECK(lines == 12);
  }

  TEST_CASE("divergence aborts and keeps the last good checkpoint") {
    const TempDir dir;
    const std::vector<LightField> lfs{synthetic::constant_disparity({3, 3}, 32, 32, 1.0, 14)};
    TrainConfig c = quick_train(50, 50);
    c.learning_rate = 1e30;
    TrainOutputs out{dir / "log.jsonl", dir.path(), {}};
    CHECK_THROWS_AS(train(prepare_dataset(lfs, c), small_model(), c, out), DivergenceError);
    CHECK(fs::exists(dir / "latest.ckpt"));
    CHECK_NOTHROW(load_checkpoint(dir / "latest.ckpt"));
  }

  TEST_CASE("training input contracts") {
    const TrainConfig c = quick_train(1, 1);
    CHECK_THROWS_AS(train({}, small_model(), c), ContractError);
    const auto ds = prepare_dataset({synthetic::constant_disparity({5, 5}, 32, 32, 1.0, 1)}, c);
    CHECK_THROWS_AS(train(ds, small_model({3, 3}), c), ContractError);
  }
}
