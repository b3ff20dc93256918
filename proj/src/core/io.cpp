// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfedit/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <vector>

#include "lfedit/errors.hpp"

namespace lfedit::io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "container formats assume a little-endian host");

using json = nlohmann::json;

constexpr const char* kLightFieldManifest = "lf.json";
constexpr const char* kRepManifest = "manifest.json";
constexpr const char* kRepVisual = "visual.png";
constexpr const char* kRepMeta = "meta.bin";
constexpr char kQ16Magic[8] = {'L', 'F', 'M', 'Q', '1', '6', '\0', '\1'};

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest " + path.string() + ": " + e.what());
  }
}

GridShape grid_from_json(const json& j, const fs::path& path) {
  if (!j.contains("grid_shape") || !j["grid_shape"].is_array() || j["grid_shape"].size() != 2)
    throw IoError("manifest " + path.string() + " lacks grid_shape [M, N]");
  return {j["grid_shape"][0].get<int>(), j["grid_shape"][1].get<int>()};
}

template <typename T>
void append_pod(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take_pod(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("truncated quantized meta file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp" + std::to_string(std::random_device{}());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

Tensor read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const int h = static_cast<int>(image.height), w = static_cast<int>(image.width);
  Tensor out(1, 3, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        out(0, c, y, x) = static_cast<float>(buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c]) / 255.0f;
  return out;
}

void write_png(const fs::path& path, const Tensor& img) {
  require(img.batch() == 1 && (img.channels() == 3 || img.channels() == 1),
          "write_png: expected [1,3,H,W] or [1,1,H,W], got " + shape_string(img.shape()));
  const int c = img.channels(), h = img.height(), w = img.width();
  std::vector<png_byte> buffer(static_cast<std::size_t>(h) * w * c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        const float v = std::clamp(img(0, ch, y, x), 0.0f, 1.0f);
        buffer[(static_cast<std::size_t>(y) * w + x) * c + ch] =
            static_cast<png_byte>(std::lround(v * 255.0f));
      }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer.data(), 0, nullptr))
    throw IoError("cannot encode PNG " + path.string() + ": " + image.message);
  std::string bytes(size, '\0');
  if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, buffer.data(), 0, nullptr))
    throw IoError("cannot encode PNG " + path.string() + ": " + image.message);
  bytes.resize(size);
  atomic_write(path, bytes);
}

Tensor quantize8(const Tensor& image) {
  Tensor out = image;
  for (float& v : out.values()) v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)) / 255.0f;
  return out;
}

std::string view_filename(AngularIndex a) {
  char name[32];
  std::snprintf(name, sizeof(name), "view_%02d_%02d.png", a.v, a.u);
  return name;
}

LightField load_lightfield(const fs::path& dir, GridShape grid) {
  require(grid.rows >= 1 && grid.cols >= 1, "load_lightfield: bad grid " + grid.str());
  const fs::path manifest = dir / kLightFieldManifest;
  if (fs::exists(manifest)) {
    const GridShape declared = grid_from_json(read_json(manifest), manifest);
    require(declared == grid, "load_lightfield: " + manifest.string() + " declares grid " +
                                  declared.str() + " but " + grid.str() + " was requested");
  }
  Tensor views;
  for (int i = 0; i < grid.count(); ++i) {
    const AngularIndex a = grid.at(i);
    const fs::path file = dir / view_filename(a);
    if (!fs::exists(file)) throw MissingViewError(a.v, a.u, file.string());
    const Tensor view = read_png(file);
    if (i == 0) views = Tensor(grid.count(), 3, view.height(), view.width());
    require(view.height() == views.height() && view.width() == views.width(),
            "load_lightfield: view " + file.filename().string() + " is " +
                std::to_string(view.height()) + "x" + std::to_string(view.width()) +
                " but view_00_00.png is " + std::to_string(views.height()) + "x" +
                std::to_string(views.width()));
    std::copy_n(view.data(), view.size(), views.data() + i * view.size());
  }
  return LightField(grid, std::move(views));
}

LightField load_lightfield(const fs::path& dir) {
  const fs::path manifest = dir / kLightFieldManifest;
  if (!fs::exists(manifest)) throw IoError("no " + std::string(kLightFieldManifest) + " in " + dir.string());
  return load_lightfield(dir, grid_from_json(read_json(manifest), manifest));
}

void save_lightfield(const LightField& lf, const fs::path& dir) {
  fs::create_directories(dir);
  const GridShape grid = lf.grid();
  for (int i = 0; i < grid.count(); ++i) write_png(dir / view_filename(grid.at(i)), lf.views().slice_batch(i, 1));
  const json manifest = {{"grid_shape", {grid.rows, grid.cols}},
                         {"height", lf.height()},
                         {"width", lf.width()},
                         {"view_pattern", "view_{v:02d}_{u:02d}.png"}};
  atomic_write(dir / kLightFieldManifest, manifest.dump(2) + "\n");
}

void write_representation(const Representation& rep, const fs::path& dir) {
  rep.validate();
  fs::create_directories(dir);
  write_png(dir / kRepVisual, rep.visual.image());

  const Tensor& meta = rep.meta.data();
  const int k = meta.channels(), h = meta.height(), w = meta.width();
  std::string bytes;
  bytes.reserve(meta.size() * sizeof(float));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < k; ++c) append_pod(bytes, meta(0, c, y, x));
  atomic_write(dir / kRepMeta, bytes);

  const auto& m = rep.manifest;
  const json manifest = {{"format", "lfedit-representation"},
                         {"format_version", 1},
                         {"grid_shape", {m.grid.rows, m.grid.cols}},
                         {"model_version", m.model_version},
                         {"dtype", m.dtype},
                         {"meta_channels", m.meta_channels},
                         {"height", m.height},
                         {"width", m.width},
                         {"meta_layout", "HWK"},
                         {"byte_order", "little"}};
  atomic_write(dir / kRepManifest, manifest.dump(2) + "\n");
}

Representation read_representation(const fs::path& dir) {
  const fs::path manifest_path = dir / kRepManifest;
  if (!fs::exists(manifest_path)) throw IoError("missing " + manifest_path.string());
  const json j = read_json(manifest_path);
  RepresentationManifest m;
  try {
    m.grid = grid_from_json(j, manifest_path);
    m.model_version = j.at("model_version").get<std::string>();
    m.dtype = j.at("dtype").get<std::string>();
    m.meta_channels = j.at("meta_channels").get<int>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest " + manifest_path.string() + ": " + e.what());
  }
  if (m.dtype != "float32") throw IoError("meta dtype '" + m.dtype + "' is not float32");

  const std::string bytes = read_file(dir / kRepMeta);
  const std::size_t expected = static_cast<std::size_t>(m.height) * m.width * m.meta_channels * sizeof(float);
  if (bytes.size() != expected)
    throw IoError("meta.bin holds " + std::to_string(bytes.size()) + " bytes, manifest implies " +
                  std::to_string(expected) + " (float32 " + std::to_string(m.height) + "x" +
                  std::to_string(m.width) + "x" + std::to_string(m.meta_channels) + ")");
  Tensor meta(1, m.meta_channels, m.height, m.width);
  std::size_t pos = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      for (int c = 0; c < m.meta_channels; ++c) meta(0, c, y, x) = take_pod<float>(bytes, pos);

  Representation rep{VisualChannels(read_png(dir / kRepVisual)), MetaChannel(std::move(meta)), m};
  rep.validate();
  return rep;
}

void write_meta_quantized16(const MetaChannel& meta, const fs::path& path) {
  const Tensor& d = meta.data();
  const int k = d.channels(), h = d.height(), w = d.width();
  std::string bytes(kQ16Magic, sizeof(kQ16Magic));
  append_pod<std::int32_t>(bytes, k);
  append_pod<std::int32_t>(bytes, h);
  append_pod<std::int32_t>(bytes, w);
  std::vector<float> lo(k), hi(k);
  for (int c = 0; c < k; ++c) {
    const float* p = d.plane(0, c);
    const auto [mn, mx] = std::minmax_element(p, p + d.plane_size());
    lo[c] = *mn, hi[c] = *mx;
    append_pod(bytes, lo[c]);
    append_pod(bytes, hi[c]);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < k; ++c) {
        const float range = hi[c] - lo[c];
        const double t = range > 0 ? (d(0, c, y, x) - lo[c]) / double(range) : 0.0;
        append_pod<std::uint16_t>(bytes, static_cast<std::uint16_t>(std::lround(t * 65535.0)));
      }
  atomic_write(path, bytes);
}

MetaChannel read_meta_quantized16(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kQ16Magic) || std::memcmp(bytes.data(), kQ16Magic, sizeof(kQ16Magic)) != 0)
    throw IoError(path.string() + " is not a quantized meta file");
  std::size_t pos = sizeof(kQ16Magic);
  const int k = take_pod<std::int32_t>(bytes, pos);
  const int h = take_pod<std::int32_t>(bytes, pos);
  const int w = take_pod<std::int32_t>(bytes, pos);
  if (k < 1 || h < 1 || w < 1) throw IoError(path.string() + ": bad dimensions");
  std::vector<float> lo(k), hi(k);
  for (int c = 0; c < k; ++c) lo[c] = take_pod<float>(bytes, pos), hi[c] = take_pod<float>(bytes, pos);
  Tensor out(1, k, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < k; ++c) {
        const double code = take_pod<std::uint16_t>(bytes, pos);
        out(0, c, y, x) = static_cast<float>(lo[c] + (hi[c] - lo[c]) * (code / 65535.0));
      }
  return MetaChannel(std::move(out));
}

}  // namespace lfedit::io
