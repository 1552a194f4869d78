// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string_view>

namespace bitedit {

namespace {

constexpr std::uint8_t kVersion = 1;
// Upper bound on any single dimension read from a file.
constexpr std::uint32_t kMaxDim = 1u << 16;

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed");
}

void get_bytes(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw IoError("unexpected end of file");
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<unsigned char, 4> b{
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  put_bytes(out, b.data(), b.size());
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  get_bytes(in, b.data(), b.size());
  return static_cast<std::uint32_t>(b[0]) |
         static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 |
         static_cast<std::uint32_t>(b[3]) << 24;
}

int get_dim(std::istream& in, std::string_view what, bool allow_zero = false) {
  const std::uint32_t v = get_u32(in);
  if ((v == 0 && !allow_zero) || v > kMaxDim) {
    throw IoError("bad " + std::string(what) + " " + std::to_string(v));
  }
  return static_cast<int>(v);
}

void put_f32(std::ostream& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

double get_f32(std::istream& in) {
  const float v = std::bit_cast<float>(get_u32(in));
  if (!std::isfinite(v)) throw IoError("non-finite value in file");
  return v;
}

void put_header(std::ostream& out, std::string_view magic) {
  put_bytes(out, magic.data(), 4);
  put_bytes(out, &kVersion, 1);
}

void expect_header(std::istream& in, std::string_view magic) {
  std::array<char, 4> got{};
  get_bytes(in, got.data(), got.size());
  if (std::string_view(got.data(), got.size()) != magic) {
    throw IoError("not a " + std::string(magic) + " file");
  }
  std::uint8_t version = 0;
  get_bytes(in, &version, 1);
  if (version != kVersion) {
    throw IoError("unsupported " + std::string(magic) + " version " +
                  std::to_string(version));
  }
}

template <class Tensor>
void put_tensor(std::ostream& out, const Tensor& t) {
  for (Eigen::Index n = 0; n < t.size(); ++n) put_f32(out, t.data()[n]);
}

template <class Tensor>
void get_tensor(std::istream& in, Tensor& t) {
  for (Eigen::Index n = 0; n < t.size(); ++n) t.data()[n] = get_f32(in);
}

void put_features(std::ostream& out, const FeatureMap& map) {
  for (double v : map.data()) put_f32(out, v);
}

FeatureMap get_features(std::istream& in, int h, int w, int d) {
  std::vector<double> data(static_cast<std::size_t>(h) * w * d);
  for (double& v : data) v = get_f32(in);
  return FeatureMap(h, w, d, std::move(data));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

template <class Fn>
auto with_input(const std::string& path, Fn&& fn) {
  std::ifstream in = open_in(path);
  try {
    return fn(in);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(path + ": " + e.what());
  }
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  std::ofstream out = open_out(path);
  fn(out);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

// Skips whitespace and '#' comments between PNM header fields.
int pnm_field(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      break;
    }
  }
  long value = -1;
  if (!(in >> value) || value <= 0 || value > 65535) {
    throw IoError("malformed PNM header");
  }
  return static_cast<int>(value);
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_feature_map(std::ostream& out, const FeatureMap& map) {
  put_header(out, "BQFM");
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.depth()));
  put_features(out, map);
}

FeatureMap read_feature_map(std::istream& in) {
  expect_header(in, "BQFM");
  const int h = get_dim(in, "height");
  const int w = get_dim(in, "width");
  const int d = get_dim(in, "depth");
  return get_features(in, h, w, d);
}

void save_feature_map(const std::string& path, const FeatureMap& map) {
  with_output(path, [&](std::ostream& out) { write_feature_map(out, map); });
}

FeatureMap load_feature_map(const std::string& path) {
  return with_input(path, [](std::istream& in) { return read_feature_map(in); });
}

void write_pyramid(std::ostream& out, const TokenPyramid& pyramid) {
  if (pyramid.size() == 0) throw std::invalid_argument("empty token pyramid");
  const int d = pyramid.depth();
  put_header(out, "BQTK");
  put_u32(out, static_cast<std::uint32_t>(pyramid.size()));
  put_u32(out, static_cast<std::uint32_t>(d));
  for (const Extent& e : pyramid.schedule().scales()) {
    put_u32(out, static_cast<std::uint32_t>(e.height));
    put_u32(out, static_cast<std::uint32_t>(e.width));
  }
  for (const TokenMap& map : pyramid.maps()) {
    std::vector<std::uint8_t> bytes((map.words().size() * d + 7) / 8, 0);
    std::size_t bit = 0;
    for (TokenWord word : map.words()) {
      for (int b = 0; b < d; ++b, ++bit) {
        if ((word >> b) & 1u) bytes[bit / 8] |= std::uint8_t(1u << (bit % 8));
      }
    }
    put_bytes(out, bytes.data(), bytes.size());
  }
}

TokenPyramid read_pyramid(std::istream& in) {
  expect_header(in, "BQTK");
  const int k_count = get_dim(in, "scale count");
  const int d = get_dim(in, "token depth");
  if (d > kMaxTokenDepth) throw IoError("token depth above 64");
  std::vector<Extent> scales;
  for (int k = 0; k < k_count; ++k) {
    const int h = get_dim(in, "scale height");
    const int w = get_dim(in, "scale width");
    scales.push_back({h, w});
  }
  std::vector<TokenMap> maps;
  for (const Extent& e : scales) {
    std::vector<std::uint8_t> bytes((e.area() * d + 7) / 8);
    get_bytes(in, bytes.data(), bytes.size());
    std::vector<TokenWord> words(e.area(), 0);
    std::size_t bit = 0;
    for (TokenWord& word : words) {
      for (int b = 0; b < d; ++b, ++bit) {
        if ((bytes[bit / 8] >> (bit % 8)) & 1u) word |= TokenWord{1} << b;
      }
    }
    maps.emplace_back(e, d, std::move(words));
  }
  return TokenPyramid(ScaleSchedule(std::move(scales)), std::move(maps));
}

void save_pyramid(const std::string& path, const TokenPyramid& pyramid) {
  with_output(path, [&](std::ostream& out) { write_pyramid(out, pyramid); });
}

TokenPyramid load_pyramid(const std::string& path) {
  return with_input(path, [](std::istream& in) { return read_pyramid(in); });
}

void write_model(std::ostream& out, const ModelFile& model) {
  const PredictorShape& shape = model.shape;
  const Matrix& learnable = model.adaptation.learnable;
  const auto& adapter = model.adaptation.adapter;
  if (model.base && !(model.base->shape == shape)) {
    throw std::invalid_argument("model shape does not match its base weights");
  }
  if (learnable.size() > 0 && learnable.cols() != shape.width) {
    throw std::invalid_argument("learnable rows have the wrong width");
  }
  // Validates adapter shapes.
  if (adapter) with_adapter(PredictorParams::zeros(shape), adapter);

  put_header(out, "BQPM");
  put_u32(out, static_cast<std::uint32_t>(shape.width));
  put_u32(out, static_cast<std::uint32_t>(shape.depth));
  put_u32(out, static_cast<std::uint32_t>(learnable.rows()));
  put_u32(out, adapter ? static_cast<std::uint32_t>(adapter->rank()) : 0u);
  put_u32(out, model.base ? static_cast<std::uint32_t>(shape.vocab) : 0u);
  put_u32(out, static_cast<std::uint32_t>(shape.schedule.size()));
  for (const Extent& e : shape.schedule.scales()) {
    put_u32(out, static_cast<std::uint32_t>(e.height));
    put_u32(out, static_cast<std::uint32_t>(e.width));
  }
  if (model.base) {
    for_each_base_tensor(*model.base, [&](std::string_view, const auto& t) {
      put_tensor(out, t);
    });
  }
  if (learnable.rows() > 0) put_tensor(out, learnable);
  if (adapter) {
    for_each_adapter_tensor(*adapter, [&](std::string_view, const Matrix& t) {
      put_tensor(out, t);
    });
  }
}

ModelFile read_model(std::istream& in) {
  expect_header(in, "BQPM");
  ModelFile model;
  PredictorShape& shape = model.shape;
  shape.width = get_dim(in, "model width");
  shape.depth = get_dim(in, "token depth");
  if (shape.depth > kMaxTokenDepth) throw IoError("token depth above 64");
  const int learnable_rows = get_dim(in, "learnable row count", true);
  const int rank = get_dim(in, "adapter rank", true);
  shape.vocab = get_dim(in, "vocabulary size", true);
  const int k_count = get_dim(in, "scale count");
  std::vector<Extent> scales;
  for (int k = 0; k < k_count; ++k) {
    const int h = get_dim(in, "scale height");
    const int w = get_dim(in, "scale width");
    scales.push_back({h, w});
  }
  shape.schedule = ScaleSchedule(std::move(scales));

  if (shape.vocab > 0) {
    model.base = PredictorParams::zeros(shape);
    for_each_base_tensor(*model.base,
                         [&](std::string_view, auto& t) { get_tensor(in, t); });
  }
  model.adaptation.learnable = Matrix::Zero(learnable_rows, shape.width);
  get_tensor(in, model.adaptation.learnable);
  if (rank > 0) {
    model.adaptation.adapter = LowRankAdapter::zeros(shape, rank);
    for_each_adapter_tensor(*model.adaptation.adapter,
                            [&](std::string_view, Matrix& t) { get_tensor(in, t); });
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError("trailing bytes after BQPM payload");
  }
  return model;
}

void save_model(const std::string& path, const ModelFile& model) {
  with_output(path, [&](std::ostream& out) { write_model(out, model); });
}

ModelFile load_model(const std::string& path) {
  return with_input(path, [](std::istream& in) { return read_model(in); });
}

void save_predictor(const std::string& path, const PredictorParams& params) {
  ModelFile model;
  model.shape = params.shape;
  model.base = with_adapter(params, std::nullopt);
  model.adaptation.learnable = Matrix::Zero(0, params.shape.width);
  model.adaptation.adapter = params.adapter;
  save_model(path, model);
}

PredictorParams load_predictor(const std::string& path) {
  ModelFile model = load_model(path);
  if (!model.base) {
    throw IoError(path + ": file holds no predictor weights (inversion sidecar?)");
  }
  return with_adapter(std::move(*model.base), model.adaptation.adapter);
}

void save_sidecar(const std::string& path, const PredictorShape& shape,
                  const Adaptation& adaptation) {
  ModelFile model;
  model.shape = shape;
  model.adaptation = adaptation;
  save_model(path, model);
}

Adaptation load_sidecar(const std::string& path, const PredictorShape& shape) {
  ModelFile model = load_model(path);
  if (model.shape.width != shape.width || model.shape.depth != shape.depth ||
      model.shape.schedule != shape.schedule) {
    throw std::invalid_argument(path + ": sidecar does not match the predictor");
  }
  return std::move(model.adaptation);
}

void write_edited(std::ostream& out, const std::vector<FeatureMap>& edited) {
  if (edited.empty()) throw std::invalid_argument("no edited scales");
  const FeatureMap& first = edited.front();
  for (const FeatureMap& map : edited) {
    if (map.extent() != first.extent() || map.depth() != first.depth()) {
      throw std::invalid_argument("edited scales differ in size");
    }
  }
  put_header(out, "BQEP");
  put_u32(out, static_cast<std::uint32_t>(edited.size()));
  put_u32(out, static_cast<std::uint32_t>(first.height()));
  put_u32(out, static_cast<std::uint32_t>(first.width()));
  put_u32(out, static_cast<std::uint32_t>(first.depth()));
  for (const FeatureMap& map : edited) put_features(out, map);
}

std::vector<FeatureMap> read_edited(std::istream& in) {
  expect_header(in, "BQEP");
  const int k_count = get_dim(in, "scale count");
  const int h = get_dim(in, "height");
  const int w = get_dim(in, "width");
  const int d = get_dim(in, "depth");
  std::vector<FeatureMap> out;
  for (int k = 0; k < k_count; ++k) out.push_back(get_features(in, h, w, d));
  return out;
}

void save_edited(const std::string& path,
                 const std::vector<FeatureMap>& edited) {
  with_output(path, [&](std::ostream& out) { write_edited(out, edited); });
}

std::vector<FeatureMap> load_edited(const std::string& path) {
  return with_input(path, [](std::istream& in) { return read_edited(in); });
}

void write_pgm(std::ostream& out, const Image& image) {
  if (image.size() == 0) throw std::invalid_argument("empty image");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<std::uint8_t> bytes(image.size());
  std::transform(image.values().begin(), image.values().end(), bytes.begin(),
                 to_byte);
  put_bytes(out, bytes.data(), bytes.size());
}

Image read_pgm(std::istream& in) {
  std::array<char, 2> magic{};
  get_bytes(in, magic.data(), magic.size());
  if (magic[0] != 'P' || magic[1] != '5') throw IoError("not a binary PGM (P5)");
  const int width = pnm_field(in);
  const int height = pnm_field(in);
  const int maxval = pnm_field(in);
  if (!std::isspace(in.get())) throw IoError("malformed PNM header");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<std::uint8_t> raw(n * bytes_per);
  get_bytes(in, raw.data(), raw.size());
  std::vector<double> pixels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = bytes_per == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
    if (v > maxval) throw IoError("PGM sample above maxval");
    pixels[i] = static_cast<double>(v) / maxval;
  }
  return Image(height, width, std::move(pixels));
}

void save_pgm(const std::string& path, const Image& image) {
  with_output(path, [&](std::ostream& out) { write_pgm(out, image); });
}

Image load_pgm(const std::string& path) {
  return with_input(path, [](std::istream& in) { return read_pgm(in); });
}

void save_ppm(const std::string& path, const Image& image) {
  if (image.size() == 0) throw std::invalid_argument("empty image");
  with_output(path, [&](std::ostream& out) {
    out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<std::uint8_t> bytes;
    bytes.reserve(image.size() * 3);
    for (double v : image.values()) bytes.insert(bytes.end(), 3, to_byte(v));
    put_bytes(out, bytes.data(), bytes.size());
  });
}

EditMask mask_from_image(const Image& image) {
  EditMask mask(image.height(), image.width());
  for (int i = 0; i < image.height(); ++i) {
    for (int j = 0; j < image.width(); ++j) mask(i, j) = image(i, j) < 0.5;
  }
  return mask;
}

Image mask_to_image(const EditMask& mask) {
  Image image(mask.height(), mask.width());
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) image(i, j) = mask(i, j) ? 0.0 : 1.0;
  }
  return image;
}

void save_mask(const std::string& path, const EditMask& mask) {
  save_pgm(path, mask_to_image(mask));
}

EditMask load_mask(const std::string& path) {
  return mask_from_image(load_pgm(path));
}

}  // namespace bitedit
