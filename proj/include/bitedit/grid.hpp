// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bitedit {

struct Extent {
  int height = 0;
  int width = 0;

  std::size_t area() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  bool operator==(const Extent&) const = default;
};

std::string to_string(Extent e);

// Dense 2-D grid of scalars, row-major.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{});
  Grid(int height, int width, std::vector<T> values);

  int height() const { return height_; }
  int width() const { return width_; }
  Extent extent() const { return {height_, width_}; }
  std::size_t size() const { return values_.size(); }

  T& operator()(int i, int j) { return values_[index(i, j)]; }
  const T& operator()(int i, int j) const { return values_[index(i, j)]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(j);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> values_;
};

extern template class Grid<double>;
extern template class Grid<int>;
extern template class Grid<std::uint8_t>;

// Grayscale image, pixels nominally in [0,1].
class Image : public Grid<double> {
 public:
  using Grid<double>::Grid;
};

// h x w grid of d-dimensional vectors, row-major, channel-innermost.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int depth);
  FeatureMap(int height, int width, int depth, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int depth() const { return depth_; }
  Extent extent() const { return {height_, width_}; }

  std::span<double> at(int i, int j) {
    return {data_.data() + offset(i, j), static_cast<std::size_t>(depth_)};
  }
  std::span<const double> at(int i, int j) const {
    return {data_.data() + offset(i, j), static_cast<std::size_t>(depth_)};
  }
  double& operator()(int i, int j, int c) { return data_[offset(i, j) + c]; }
  double operator()(int i, int j, int c) const {
    return data_[offset(i, j) + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  FeatureMap& operator+=(const FeatureMap& other);
  FeatureMap operator-(const FeatureMap& other) const;

  // Sum of squared entries.
  double squared_norm() const;
  bool all_finite() const;

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t offset(int i, int j) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(j)) *
           static_cast<std::size_t>(depth_);
  }

  int height_ = 0;
  int width_ = 0;
  int depth_ = 0;
  std::vector<double> data_;
};

// Coarse-to-fine list of token resolutions; the last entry is the full grid.
class ScaleSchedule {
 public:
  ScaleSchedule() = default;
  explicit ScaleSchedule(std::vector<Extent> scales);

  // "1x1,2x2,4x4"
  static ScaleSchedule parse(std::string_view text);
  // Geometric-ish ramp ending at `full`. For 16x16 this is
  // 1,2,4,6,8,12,16.
  static ScaleSchedule ramp(Extent full);

  std::size_t size() const { return scales_.size(); }
  const Extent& operator[](std::size_t k) const { return scales_[k]; }
  const Extent& full() const { return scales_.back(); }
  std::span<const Extent> scales() const { return scales_; }
  // Sum of h_k * w_k over all scales.
  std::size_t total_positions() const;

  std::string str() const;
  bool operator==(const ScaleSchedule&) const = default;

 private:
  std::vector<Extent> scales_;
};

// Half-pixel-centre bilinear resampling with edge clamping.
FeatureMap bilinear_resample(const FeatureMap& map, Extent target);

// out = a * (1 - w) + b * w, weight broadcast over depth.
FeatureMap weighted_blend(const FeatureMap& a, const FeatureMap& b,
                          const Grid<double>& weight);

struct CodecSettings {
  int patch = 4;
  double gain = 1.0;

  int depth() const { return patch * patch; }
};

// Space-to-depth patchify with [0,1] -> [-gain, gain].
FeatureMap encode_image(const Image& image, const CodecSettings& codec = {});
// Inverse of encode_image, pixels clamped to [0,1].
Image decode_image(const FeatureMap& features, const CodecSettings& codec = {});

}  // namespace bitedit
