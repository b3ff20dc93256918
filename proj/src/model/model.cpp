// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/model.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "lfedit/errors.hpp"
#include "lfedit/io.hpp"

namespace lfedit {

using autograd::Variable;
using nlohmann::json;

namespace {

constexpr float kLeak = 0.1f;
constexpr char kCheckpointMagic[8] = {'L', 'F', 'C', 'K', 'P', 'T', '0', '1'};

int encoder_level_width(const ModelConfig& c, int level) {
  return c.encoder_width << std::min(level, 2);
}

Variable conv(const Variable& x, const ModelParams& p, const std::string& name) {
  return autograd::conv2d(x, p.at(name + ".weight"), p.at(name + ".bias"));
}

Variable conv_act(const Variable& x, const ModelParams& p, const std::string& name) {
  return autograd::leaky_relu(conv(x, p, name), kLeak);
}

Variable residual_block(const Variable& x, const ModelParams& p, const std::string& name) {
  Variable r = conv(conv_act(x, p, name + ".0"), p, name + ".1");
  return autograd::leaky_relu(autograd::add(x, r), kLeak);
}

std::uint64_t mix_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

// ---- config ----------------------------------------------------------------

void ModelConfig::validate() const {
  require(grid.rows >= 1 && grid.cols >= 1 && grid.rows % 2 == 1 && grid.cols % 2 == 1,
          "model grid must have odd positive extents, got " + grid.str());
  require(meta_channels >= 1, "meta_channels must be >= 1");
  require(feature_channels >= 3, "feature_channels must be >= 3");
  require(encoder_width >= 1 && sepnet_width >= 1 && dispnet_width >= 1 && fusion_width >= 1,
          "network widths must be positive");
  require(encoder_levels >= 0 && encoder_levels <= 6, "encoder_levels must lie in [0,6]");
  require(sepnet_blocks >= 0 && fusion_blocks >= 0, "block counts must be non-negative");
  require(dispnet_layers >= 2, "dispnet_layers must be >= 2");
  require(max_disparity > 0.0 && std::isfinite(max_disparity), "max_disparity must be positive");
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"grid_shape", {c.grid.rows, c.grid.cols}},
           {"meta_channels", c.meta_channels},
           {"feature_channels", c.feature_channels},
           {"encoder_width", c.encoder_width},
           {"encoder_levels", c.encoder_levels},
           {"sepnet_width", c.sepnet_width},
           {"sepnet_blocks", c.sepnet_blocks},
           {"dispnet_width", c.dispnet_width},
           {"dispnet_layers", c.dispnet_layers},
           {"fusion_width", c.fusion_width},
           {"fusion_blocks", c.fusion_blocks},
           {"max_disparity", c.max_disparity}};
}

void from_json(const json& j, ModelConfig& c) {
  const auto g = j.at("grid_shape");
  c.grid = {g.at(0).get<int>(), g.at(1).get<int>()};
  j.at("meta_channels").get_to(c.meta_channels);
  j.at("feature_channels").get_to(c.feature_channels);
  j.at("encoder_width").get_to(c.encoder_width);
  j.at("encoder_levels").get_to(c.encoder_levels);
  j.at("sepnet_width").get_to(c.sepnet_width);
  j.at("sepnet_blocks").get_to(c.sepnet_blocks);
  j.at("dispnet_width").get_to(c.dispnet_width);
  j.at("dispnet_layers").get_to(c.dispnet_layers);
  j.at("fusion_width").get_to(c.fusion_width);
  j.at("fusion_blocks").get_to(c.fusion_blocks);
  j.at("max_disparity").get_to(c.max_disparity);
}

// ---- parameters ------------------------------------------------------------

ModelParams::ModelParams(const ModelConfig& config) : config_(config) { config_.validate(); }

ModelParams::ModelParams(const ModelConfig& config, std::uint64_t seed) : ModelParams(config) {
  const ModelConfig& c = config_;
  const int views = c.grid.count();

  add_conv("encoder.in.0", c.encoder_width, 3 * views, 3, seed, 1.0f);
  add_conv("encoder.in.1", c.encoder_width, c.encoder_width, 3, seed, 1.0f);
  for (int l = 1; l <= c.encoder_levels; ++l) {
    const std::string n = "encoder.down" + std::to_string(l);
    add_conv(n + ".0", encoder_level_width(c, l), encoder_level_width(c, l - 1), 3, seed, 1.0f);
    add_conv(n + ".1", encoder_level_width(c, l), encoder_level_width(c, l), 3, seed, 1.0f);
  }
  for (int l = c.encoder_levels - 1; l >= 0; --l) {
    const std::string n = "encoder.up" + std::to_string(l);
    const int in = encoder_level_width(c, l + 1) + encoder_level_width(c, l);
    add_conv(n + ".0", encoder_level_width(c, l), in, 3, seed, 1.0f);
    add_conv(n + ".1", encoder_level_width(c, l), encoder_level_width(c, l), 3, seed, 1.0f);
  }
  add_conv("encoder.out", c.meta_channels, c.encoder_width, 1, seed, 1.0f);

  add_conv("sepnet.in", c.sepnet_width, c.meta_channels, 3, seed, 1.0f);
  for (int b = 0; b < c.sepnet_blocks; ++b) {
    const std::string n = "sepnet.block" + std::to_string(b);
    add_conv(n + ".0", c.sepnet_width, c.sepnet_width, 3, seed, 1.0f);
    add_conv(n + ".1", c.sepnet_width, c.sepnet_width, 3, seed, 0.5f);
  }
  add_conv("sepnet.proj", views * c.feature_channels, c.sepnet_width, 1, seed, 1.0f);

  for (int l = 0; l < c.dispnet_layers; ++l) {
    const bool first = l == 0, last = l + 1 == c.dispnet_layers;
    add_conv("dispnet.conv" + std::to_string(l), last ? 2 : c.dispnet_width,
             first ? c.feature_channels : c.dispnet_width, 3, seed, last ? 0.1f : 1.0f);
  }

  add_conv("fusion.in", c.fusion_width, 3 + 1 + c.feature_channels, 3, seed, 1.0f);
  for (int b = 0; b < c.fusion_blocks; ++b) {
    const std::string n = "fusion.block" + std::to_string(b);
    add_conv(n + ".0", c.fusion_width, c.fusion_width, 3, seed, 1.0f);
    add_conv(n + ".1", c.fusion_width, c.fusion_width, 3, seed, 0.5f);
  }
  add_conv("fusion.head", 3, c.fusion_width, 3, seed, 0.0f);
}

void ModelParams::add_conv(const std::string& name, int out, int in, int k, std::uint64_t seed,
                           float gain) {
  Tensor w(out, in, k, k);
  if (gain != 0.0f) {
    std::mt19937_64 rng(mix_seed(seed, entries_.size()));
    std::normal_distribution<float> dist(0.0f, gain * std::sqrt(2.0f / static_cast<float>(in * k * k)));
    for (float& v : w.values()) v = dist(rng);
  }
  add(name + ".weight", std::move(w));
  add(name + ".bias", Tensor(out, 1, 1, 1));
}

void ModelParams::add(const std::string& name, Tensor value) {
  require(!contains(name), "duplicate parameter " + name);
  require_finite(value, "parameter " + name);
  index_[name] = entries_.size();
  entries_.push_back({name, Variable(std::move(value), true)});
}

const Variable& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("model has no parameter " + name);
  return entries_[it->second].var;
}

std::vector<const ModelParams::Entry*> ModelParams::group(const std::string& prefix) const {
  std::vector<const Entry*> out;
  for (const auto& e : entries_)
    if (e.name.rfind(prefix, 0) == 0) out.push_back(&e);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var.value().size();
  return n;
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (!(config_ == other.config_) || version_ != other.version_ || entries_.size() != other.entries_.size())
    return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Tensor& a = entries_[i].var.value();
    const Tensor& b = other.entries_[i].var.value();
    if (entries_[i].name != other.entries_[i].name || !a.same_shape(b) ||
        std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0)
      return false;
  }
  return true;
}

// ---- checkpoints -----------------------------------------------------------

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path, const json& metadata) {
  static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : params.entries()) {
    const Tensor& t = e.var.value();
    tensors.push_back({{"name", e.name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size();
  }
  const json header = {{"format_version", 1},
                       {"model_version", params.version()},
                       {"config", params.config()},
                       {"dtype", "float32"},
                       {"tensors", tensors},
                       {"metadata", metadata}};
  const std::string text = header.dump();
  const std::uint64_t len = text.size();

  std::string bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  bytes.append(reinterpret_cast<const char*>(&len), sizeof(len));
  bytes += text;
  for (const auto& e : params.entries())
    bytes.append(reinterpret_cast<const char*>(e.var.value().data()), e.var.value().size() * sizeof(float));
  io::atomic_write(path, bytes);
}

ModelParams load_checkpoint(const std::filesystem::path& path, json* metadata) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  const std::string bytes = io::read_file(path);
  const std::size_t prefix = sizeof(kCheckpointMagic) + sizeof(std::uint64_t);
  if (bytes.size() < prefix || std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw IoError("not an lfedit checkpoint: " + path.string());
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + sizeof(kCheckpointMagic), sizeof(len));
  if (len > bytes.size() - prefix) throw IoError("truncated checkpoint header: " + path.string());

  json header;
  ModelConfig config;
  try {
    header = json::parse(bytes.substr(prefix, len));
    config = header.at("config").get<ModelConfig>();
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  const ModelParams layout(config, 0);
  ModelParams params(config);
  params.set_version(header.value("model_version", std::string(kModelVersion)));

  const std::size_t data_begin = prefix + len;
  const std::size_t floats = (bytes.size() - data_begin) / sizeof(float);
  json tensors;
  try {
    tensors = header.at("tensors");
    for (const auto& t : tensors) {
      t.at("name").get<std::string>();
      t.at("shape").get<std::array<int, 4>>();
      t.at("offset").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint tensor table in " + path.string() + ": " + e.what());
  }
  if (!tensors.is_array() || tensors.size() != layout.entries().size())
    throw IoError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, config implies " +
                  std::to_string(layout.entries().size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const std::string name = tensors[i].at("name").get<std::string>();
    const auto shape = tensors[i].at("shape").get<std::array<int, 4>>();
    const std::uint64_t offset = tensors[i].at("offset").get<std::uint64_t>();
    const Tensor& expected = layout.entries()[i].var.value();
    if (name != layout.entries()[i].name || shape != expected.shape())
      throw IoError("checkpoint tensor " + name + " " + shape_string(shape) + " does not match config layout " +
                    layout.entries()[i].name + " " + shape_string(expected.shape()));
    Tensor t(shape[0], shape[1], shape[2], shape[3]);
    if (offset + t.size() > floats) throw IoError("checkpoint data truncated at tensor " + name);
    std::memcpy(t.data(), bytes.data() + data_begin + offset * sizeof(float), t.size() * sizeof(float));
    params.add(name, std::move(t));
  }
  if (metadata) *metadata = header.value("metadata", json::object());
  return params;
}

// ---- networks --------------------------------------------------------------

Variable encoder_forward(const Variable& views, const ModelParams& p) {
  const ModelConfig& c = p.config();
  const Tensor& v = views.value();
  require(v.batch() == c.grid.count() && v.channels() == 3,
          "encoder expects [" + std::to_string(c.grid.count()) + ",3,H,W] views, got " + shape_string(v.shape()));
  require(v.height() >= c.min_spatial_size() && v.width() >= c.min_spatial_size(),
          "encoder needs views of at least " + std::to_string(c.min_spatial_size()) + " pixels per side");

  Variable x = autograd::reshape(views, 1, 3 * v.batch(), v.height(), v.width());
  std::vector<Variable> skips;
  x = conv_act(conv_act(x, p, "encoder.in.0"), p, "encoder.in.1");
  for (int l = 1; l <= c.encoder_levels; ++l) {
    skips.push_back(x);
    const std::string n = "encoder.down" + std::to_string(l);
    x = conv_act(conv_act(autograd::avg_pool2(x), p, n + ".0"), p, n + ".1");
  }
  for (int l = c.encoder_levels - 1; l >= 0; --l) {
    const Variable& skip = skips[static_cast<std::size_t>(l)];
    const std::string n = "encoder.up" + std::to_string(l);
    Variable up = autograd::upsample2_to(x, skip.value().height(), skip.value().width());
    x = conv_act(conv_act(autograd::concat_channels({up, skip}), p, n + ".0"), p, n + ".1");
  }
  return conv(x, p, "encoder.out");
}

Variable sepnet_trunk(const Variable& z, const ModelParams& p) {
  const ModelConfig& c = p.config();
  require(z.value().batch() == 1 && z.value().channels() == c.meta_channels,
          "SepNet expects a [1," + std::to_string(c.meta_channels) + ",H,W] meta channel, got " +
              shape_string(z.value().shape()));
  Variable x = conv_act(z, p, "sepnet.in");
  for (int b = 0; b < c.sepnet_blocks; ++b) x = residual_block(x, p, "sepnet.block" + std::to_string(b));
  return x;
}

Variable separate_views(const Variable& trunk, const ModelParams& p, std::span<const int> views) {
  return autograd::project_views(trunk, p.at("sepnet.proj.weight"), p.at("sepnet.proj.bias"), views,
                                 p.config().feature_channels);
}

Variable dispnet_forward(const Variable& features, const ModelParams& p) {
  const ModelConfig& c = p.config();
  require(features.value().channels() == c.feature_channels,
          "DispNet expects " + std::to_string(c.feature_channels) + " feature channels, got " +
              shape_string(features.value().shape()));
  Variable x = features;
  for (int l = 0; l + 1 < c.dispnet_layers; ++l) x = conv_act(x, p, "dispnet.conv" + std::to_string(l));
  x = conv(x, p, "dispnet.conv" + std::to_string(c.dispnet_layers - 1));
  return autograd::scaled_tanh(x, static_cast<float>(c.max_disparity));
}

Variable fusion_forward(const Variable& warped, const Variable& occlusion, const Variable& features,
                        const ModelParams& p) {
  const ModelConfig& c = p.config();
  const Tensor& w = warped.value();
  require(w.channels() == 3 && occlusion.value().channels() == 1 &&
              features.value().channels() == c.feature_channels,
          "FusionNet expects warped [B,3], occlusion [B,1] and features [B," +
              std::to_string(c.feature_channels) + "]");
  require(occlusion.value().batch() == w.batch() && features.value().batch() == w.batch() &&
              occlusion.value().height() == w.height() && features.value().height() == w.height() &&
              occlusion.value().width() == w.width() && features.value().width() == w.width(),
          "FusionNet inputs are not aligned: warped " + shape_string(w.shape()) + ", occlusion " +
              shape_string(occlusion.value().shape()) + ", features " + shape_string(features.value().shape()));
  Variable x = conv_act(autograd::concat_channels({warped, occlusion, features}), p, "fusion.in");
  for (int b = 0; b < c.fusion_blocks; ++b) x = residual_block(x, p, "fusion.block" + std::to_string(b));
  return autograd::add_clamp_unit(warped, conv(x, p, "fusion.head"));
}

AngularOffset offset_to_center(GridShape grid, int view) {
  const AngularIndex a = grid.at(view), c = grid.center();
  return {c.v - a.v, c.u - a.u};
}

DecoderGraph decoder_forward(const Variable& features, std::span<const int> views,
                             const Variable& central_features, const Variable& visual, const ModelParams& p,
                             bool use_fusion) {
  const GridShape grid = p.config().grid;
  const int center = grid.index(grid.center());
  require(static_cast<int>(views.size()) == features.value().batch(), "decoder: one feature map per view");
  require(visual.value().batch() == 1 && visual.value().channels() == 3,
          "decoder: visual channels must be [1,3,H,W]");

  DecoderGraph g;
  g.views.assign(views.begin(), views.end());
  std::vector<AngularOffset> deltas;
  int center_pos = -1;
  for (std::size_t b = 0; b < views.size(); ++b) {
    require(views[b] >= 0 && views[b] < grid.count(), "decoder: view index out of range");
    deltas.push_back(offset_to_center(grid, views[b]));
    if (views[b] == center) center_pos = static_cast<int>(b);
  }
  g.disparity = dispnet_forward(features, p);
  g.central_disparity = center_pos >= 0 ? autograd::select_batch(g.disparity, center_pos)
                                        : dispnet_forward(central_features, p);
  g.warped = autograd::warp(visual, g.disparity, deltas);
  g.occlusion = autograd::consistency(g.disparity, g.central_disparity, deltas);
  g.output = use_fusion ? fusion_forward(g.warped, g.occlusion, features, p) : g.warped;
  return g;
}

// ---- inference -------------------------------------------------------------

void check_grid(const ModelParams& p, GridShape actual) {
  const GridShape expected = p.config().grid;
  if (!(expected == actual))
    throw ContractError("grid mismatch: model expects " + expected.str() + ", got " + actual.str());
}

MetaChannel encode(const LightField& lf, const ModelParams& p) {
  check_grid(p, lf.grid());
  autograd::NoGradGuard no_grad;
  return MetaChannel(encoder_forward(Variable(lf.views()), p).value());
}

std::vector<ViewFeature> separate(const MetaChannel& z, const ModelParams& p) {
  autograd::NoGradGuard no_grad;
  const Variable trunk = sepnet_trunk(Variable(z.data()), p);
  std::vector<ViewFeature> out;
  for (int i = 0; i < p.config().grid.count(); ++i) {
    const int view[1] = {i};
    out.push_back({separate_views(trunk, p, view).value()});
  }
  return out;
}

DisparityMap disparity(const ViewFeature& f, const ModelParams& p) {
  require(f.data.batch() == 1, "disparity: expected a single feature map");
  require_finite(f.data, "view feature");
  autograd::NoGradGuard no_grad;
  return DisparityMap(dispnet_forward(Variable(f.data), p).value());
}

Tensor fuse(const WarpedView& warped, const OcclusionMap& occ, const ViewFeature& f, const ModelParams& p) {
  autograd::NoGradGuard no_grad;
  return fusion_forward(Variable(warped.image), Variable(occ.data), Variable(f.data), p).value();
}

DecodeDetail decode_features(const std::vector<ViewFeature>& features, const VisualChannels& visual,
                             const ModelParams& p, const DecodeOptions& options) {
  const ModelConfig& c = p.config();
  const GridShape grid = c.grid;
  require(static_cast<int>(features.size()) == grid.count(),
          "decode: expected " + std::to_string(grid.count()) + " feature maps, got " +
              std::to_string(features.size()));
  require(options.chunk >= 1, "decode: chunk must be >= 1");
  const int h = visual.height(), w = visual.width();
  for (const auto& f : features)
    require(f.data.batch() == 1 && f.data.channels() == c.feature_channels && f.data.height() == h &&
                f.data.width() == w,
            "decode: feature map " + shape_string(f.data.shape()) + " not aligned with visual channels");

  autograd::NoGradGuard no_grad;
  const int count = grid.count();
  const int center = grid.index(grid.center());
  const Variable vis(visual.image());
  const Variable central(features[static_cast<std::size_t>(center)].data);
  Tensor views(count, 3, h, w), warped(count, 3, h, w), disp(count, 2, h, w), occ(count, 1, h, w);
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  for (int begin = 0; begin < count; begin += options.chunk) {
    const int n = std::min(options.chunk, count - begin);
    std::vector<int> ids(static_cast<std::size_t>(n));
    Tensor batch(n, c.feature_channels, h, w);
    for (int b = 0; b < n; ++b) {
      ids[static_cast<std::size_t>(b)] = begin + b;
      std::copy_n(features[static_cast<std::size_t>(begin + b)].data.data(), batch.sample_size(),
                  batch.data() + static_cast<std::size_t>(b) * batch.sample_size());
    }
    const DecoderGraph g = decoder_forward(Variable(std::move(batch)), ids, central, vis, p, options.use_fusion);
    std::copy_n(g.output.value().data(), n * 3 * plane, views.plane(begin, 0));
    std::copy_n(g.warped.value().data(), n * 3 * plane, warped.plane(begin, 0));
    std::copy_n(g.disparity.value().data(), n * 2 * plane, disp.plane(begin, 0));
    std::copy_n(g.occlusion.value().data(), n * plane, occ.plane(begin, 0));
  }
  return {LightField(grid, std::move(views)), std::move(warped), std::move(disp), std::move(occ)};
}

DecodeDetail decode_detailed(const MetaChannel& z, const VisualChannels& visual, const ModelParams& p,
                             const DecodeOptions& options) {
  require(z.height() == visual.height() && z.width() == visual.width(),
          "decode: meta channel " + shape_string(z.data().shape()) + " and visual channels " +
              shape_string(visual.image().shape()) + " are not aligned");
  require(z.channels() == p.config().meta_channels,
          "decode: model expects K=" + std::to_string(p.config().meta_channels) + " meta channels, got " +
              std::to_string(z.channels()));
  return decode_features(separate(z, p), visual, p, options);
}

LightField decode(const MetaChannel& z, const VisualChannels& visual, const ModelParams& p,
                  const DecodeOptions& options) {
  return decode_detailed(z, visual, p, options).lightfield;
}

RepresentationManifest make_manifest(const ModelParams& p, const MetaChannel& z) {
  RepresentationManifest m;
  m.grid = p.config().grid;
  m.model_version = p.version();
  m.meta_channels = z.channels();
  m.height = z.height();
  m.width = z.width();
  return m;
}

LightField decode_representation(const Representation& rep, const ModelParams& p, const DecodeOptions& options) {
  rep.validate();
  check_grid(p, rep.manifest.grid);
  if (rep.manifest.model_version != p.version())
    spdlog::warn("representation was produced by model '{}', decoding with '{}'", rep.manifest.model_version,
                 p.version());
  return decode(rep.meta, rep.visual, p, options);
}

MetaChannel bypass_encode(const LightField& lf, int meta_channels) {
  require(meta_channels >= 1, "bypass_encode: meta_channels must be >= 1");
  return MetaChannel(Tensor(1, meta_channels, lf.height(), lf.width()));
}

LightField bypass_decode(const VisualChannels& visual, GridShape grid) {
  return LightField::tiled(grid, visual.image());
}

}  // namespace lfedit
