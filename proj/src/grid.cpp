// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/grid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace bitedit {

std::string to_string(Extent e) {
  return std::to_string(e.height) + "x" + std::to_string(e.width);
}

template <class T>
Grid<T>::Grid(int height, int width, T fill)
    : height_(height), width_(width) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("grid dimensions must be positive");
  }
  values_.assign(static_cast<std::size_t>(height) * width, fill);
}

template <class T>
Grid<T>::Grid(int height, int width, std::vector<T> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("grid dimensions must be positive");
  }
  if (values_.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("grid data length does not match dimensions");
  }
}

template class Grid<double>;
template class Grid<int>;
template class Grid<std::uint8_t>;

FeatureMap::FeatureMap(int height, int width, int depth)
    : height_(height), width_(width), depth_(depth) {
  if (height <= 0 || width <= 0 || depth <= 0) {
    throw std::invalid_argument("feature map dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(height) * width * depth, 0.0);
}

FeatureMap::FeatureMap(int height, int width, int depth,
                       std::vector<double> data)
    : height_(height), width_(width), depth_(depth), data_(std::move(data)) {
  if (height <= 0 || width <= 0 || depth <= 0) {
    throw std::invalid_argument("feature map dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * depth) {
    throw std::invalid_argument(
        "feature map data length does not match dimensions");
  }
  if (!all_finite()) {
    throw std::invalid_argument("feature map contains non-finite values");
  }
}

FeatureMap& FeatureMap::operator+=(const FeatureMap& other) {
  if (other.height_ != height_ || other.width_ != width_ ||
      other.depth_ != depth_) {
    throw std::invalid_argument("feature map dimension mismatch in +=");
  }
  for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += other.data_[n];
  return *this;
}

FeatureMap FeatureMap::operator-(const FeatureMap& other) const {
  if (other.height_ != height_ || other.width_ != width_ ||
      other.depth_ != depth_) {
    throw std::invalid_argument("feature map dimension mismatch in -");
  }
  FeatureMap out = *this;
  for (std::size_t n = 0; n < data_.size(); ++n) {
    out.data_[n] -= other.data_[n];
  }
  return out;
}

double FeatureMap::squared_norm() const {
  double sum = 0.0;
  for (double v : data_) sum += v * v;
  return sum;
}

bool FeatureMap::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

ScaleSchedule::ScaleSchedule(std::vector<Extent> scales)
    : scales_(std::move(scales)) {
  if (scales_.empty()) {
    throw std::invalid_argument("scale schedule must have at least one scale");
  }
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    if (scales_[k].height <= 0 || scales_[k].width <= 0) {
      throw std::invalid_argument("scale extents must be positive");
    }
    if (k > 0 && (scales_[k].height < scales_[k - 1].height ||
                  scales_[k].width < scales_[k - 1].width)) {
      throw std::invalid_argument("scale schedule must be non-decreasing");
    }
  }
}

namespace {

int parse_int(std::string_view text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("bad integer '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

ScaleSchedule ScaleSchedule::parse(std::string_view text) {
  std::vector<Extent> scales;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{}
                                           : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto x = item.find('x');
    if (x == std::string_view::npos) {
      const int side = parse_int(item);
      scales.push_back({side, side});
    } else {
      scales.push_back({parse_int(trim(item.substr(0, x))),
                        parse_int(trim(item.substr(x + 1)))});
    }
  }
  return ScaleSchedule(std::move(scales));
}

ScaleSchedule ScaleSchedule::ramp(Extent full) {
  static constexpr int kSteps[] = {1, 2, 4, 6, 8, 12, 16};
  std::vector<Extent> scales;
  for (int step : kSteps) {
    Extent e{std::max(1, static_cast<int>(std::lround(full.height * step / 16.0))),
             std::max(1, static_cast<int>(std::lround(full.width * step / 16.0)))};
    if (!scales.empty() && scales.back() == e) continue;
    scales.push_back(e);
  }
  if (scales.back() != full) scales.push_back(full);
  return ScaleSchedule(std::move(scales));
}

std::size_t ScaleSchedule::total_positions() const {
  std::size_t total = 0;
  for (const auto& e : scales_) total += e.area();
  return total;
}

std::string ScaleSchedule::str() const {
  std::string out;
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    if (k) out += ',';
    out += to_string(scales_[k]);
  }
  return out;
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> make_taps(int source, int target) {
  std::vector<Tap> taps(target);
  const double scale = static_cast<double>(source) / target;
  for (int t = 0; t < target; ++t) {
    double s = (t + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(source - 1));
    const int lo = static_cast<int>(std::floor(s));
    taps[t] = {lo, std::min(lo + 1, source - 1), s - lo};
  }
  return taps;
}

}  // namespace

FeatureMap bilinear_resample(const FeatureMap& map, Extent target) {
  if (target.height <= 0 || target.width <= 0) {
    throw std::invalid_argument("resample target must be at least 1x1");
  }
  if (target == map.extent()) return map;

  const auto rows = make_taps(map.height(), target.height);
  const auto cols = make_taps(map.width(), target.width);
  const int depth = map.depth();
  FeatureMap out(target.height, target.width, depth);
  for (int i = 0; i < target.height; ++i) {
    const Tap& r = rows[i];
    for (int j = 0; j < target.width; ++j) {
      const Tap& c = cols[j];
      const auto v00 = map.at(r.lo, c.lo);
      const auto v01 = map.at(r.lo, c.hi);
      const auto v10 = map.at(r.hi, c.lo);
      const auto v11 = map.at(r.hi, c.hi);
      auto dst = out.at(i, j);
      for (int ch = 0; ch < depth; ++ch) {
        const double top = (1.0 - c.frac) * v00[ch] + c.frac * v01[ch];
        const double bottom = (1.0 - c.frac) * v10[ch] + c.frac * v11[ch];
        dst[ch] = (1.0 - r.frac) * top + r.frac * bottom;
      }
    }
  }
  return out;
}

FeatureMap weighted_blend(const FeatureMap& a, const FeatureMap& b,
                          const Grid<double>& weight) {
  if (a.extent() != b.extent() || a.depth() != b.depth()) {
    throw std::invalid_argument("blend operands differ in shape");
  }
  if (weight.extent() != a.extent()) {
    throw std::invalid_argument("blend weight grid does not match operands");
  }
  FeatureMap out(a.height(), a.width(), a.depth());
  for (int i = 0; i < a.height(); ++i) {
    for (int j = 0; j < a.width(); ++j) {
      const double w = weight(i, j);
      const auto av = a.at(i, j);
      const auto bv = b.at(i, j);
      auto dst = out.at(i, j);
      for (int ch = 0; ch < a.depth(); ++ch) {
        dst[ch] = av[ch] * (1.0 - w) + bv[ch] * w;
      }
    }
  }
  return out;
}

FeatureMap encode_image(const Image& image, const CodecSettings& codec) {
  const int p = codec.patch;
  if (p <= 0) throw std::invalid_argument("patch size must be positive");
  if (!(codec.gain > 0.0)) throw std::invalid_argument("codec gain must be positive");
  if (image.height() % p != 0 || image.width() % p != 0) {
    throw std::invalid_argument("image " + to_string(image.extent()) +
                                " is not divisible by patch size " +
                                std::to_string(p));
  }
  FeatureMap out(image.height() / p, image.width() / p, p * p);
  for (int i = 0; i < out.height(); ++i) {
    for (int j = 0; j < out.width(); ++j) {
      auto dst = out.at(i, j);
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          dst[a * p + b] =
              codec.gain * (2.0 * image(i * p + a, j * p + b) - 1.0);
        }
      }
    }
  }
  return out;
}

Image decode_image(const FeatureMap& features, const CodecSettings& codec) {
  const int p = codec.patch;
  if (p <= 0 || features.depth() != p * p) {
    throw std::invalid_argument("feature depth " +
                                std::to_string(features.depth()) +
                                " does not match patch size " +
                                std::to_string(p));
  }
  Image out(features.height() * p, features.width() * p);
  for (int i = 0; i < features.height(); ++i) {
    for (int j = 0; j < features.width(); ++j) {
      const auto src = features.at(i, j);
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          const double v = (src[a * p + b] / codec.gain + 1.0) * 0.5;
          out(i * p + a, j * p + b) = std::clamp(v, 0.0, 1.0);
        }
      }
    }
  }
  return out;
}

}  // namespace bitedit
