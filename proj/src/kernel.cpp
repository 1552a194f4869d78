// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bitedit {

std::size_t EditMask::foreground_count() const {
  const auto v = values();
  return static_cast<std::size_t>(
      std::count_if(v.begin(), v.end(), [](std::uint8_t c) { return c != 0; }));
}

EditMask EditMask::complement() const {
  EditMask out(height(), width());
  const auto src = values();
  auto dst = out.values();
  for (std::size_t n = 0; n < src.size(); ++n) dst[n] = src[n] ? 0 : 1;
  return out;
}

DistanceField manhattan_distance_field(const EditMask& mask) {
  if (mask.empty()) {
    throw std::invalid_argument("no edit region: mask has no foreground cells");
  }
  const int h = mask.height();
  const int w = mask.width();
  // Larger than any real distance, small enough that +1 cannot overflow.
  const int far = h + w;
  DistanceField field(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      int d = mask(i, j) ? 0 : far;
      if (i > 0) d = std::min(d, field(i - 1, j) + 1);
      if (j > 0) d = std::min(d, field(i, j - 1) + 1);
      field(i, j) = d;
    }
  }
  for (int i = h - 1; i >= 0; --i) {
    for (int j = w - 1; j >= 0; --j) {
      int d = field(i, j);
      if (i + 1 < h) d = std::min(d, field(i + 1, j) + 1);
      if (j + 1 < w) d = std::min(d, field(i, j + 1) + 1);
      field(i, j) = d;
    }
  }
  return field;
}

SmoothingKernel linear_kernel(const DistanceField& field, double tau1,
                              double tau2) {
  if (!(tau1 >= 0.0)) throw std::invalid_argument("tau1 must be >= 0");
  if (!(tau1 < tau2)) throw std::invalid_argument("tau1 must be < tau2");
  SmoothingKernel out(field.height(), field.width());
  const auto src = field.values();
  auto dst = out.values();
  for (std::size_t n = 0; n < src.size(); ++n) {
    const double d = src[n];
    if (d <= tau1) {
      dst[n] = 0.0;
    } else if (d >= tau2) {
      dst[n] = 1.0;
    } else {
      dst[n] = (d - tau1) / (tau2 - tau1);
    }
  }
  return out;
}

SmoothingKernel gaussian_kernel(const DistanceField& field, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  SmoothingKernel out(field.height(), field.width());
  const auto src = field.values();
  auto dst = out.values();
  for (std::size_t n = 0; n < src.size(); ++n) {
    const double d = src[n];
    dst[n] = 1.0 - std::exp(-(d * d) / (2.0 * alpha * alpha));
  }
  return out;
}

SmoothingKernel constant_kernel(Extent extent, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument("kernel value must be in [0,1]");
  }
  return SmoothingKernel(extent.height, extent.width, value);
}

EditMask mask_from_attention(const FeatureMap& attention, double threshold) {
  if (attention.depth() != 1) {
    throw std::invalid_argument("attention map must have depth 1");
  }
  EditMask out(attention.height(), attention.width());
  const auto src = attention.data();
  auto dst = out.values();
  for (std::size_t n = 0; n < src.size(); ++n) {
    if (!std::isfinite(src[n])) {
      throw std::invalid_argument("attention map contains non-finite values");
    }
    dst[n] = src[n] > threshold ? 1 : 0;
  }
  if (out.empty()) {
    throw std::invalid_argument(
        "threshold too high: no attention value exceeds it");
  }
  return out;
}

EditMask mask_to_token_grid(const EditMask& pixels, Extent tokens, int patch) {
  if (patch <= 0) throw std::invalid_argument("patch size must be positive");
  if (pixels.height() != tokens.height * patch ||
      pixels.width() != tokens.width * patch) {
    throw std::invalid_argument("pixel mask " + to_string(pixels.extent()) +
                                " does not match token grid " +
                                to_string(tokens) + " at patch " +
                                std::to_string(patch));
  }
  EditMask out(tokens.height, tokens.width);
  for (int y = 0; y < pixels.height(); ++y) {
    for (int x = 0; x < pixels.width(); ++x) {
      if (pixels(y, x)) out(y / patch, x / patch) = 1;
    }
  }
  return out;
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "gaussian") return KernelKind::gaussian;
  throw std::invalid_argument("unknown kernel '" + name +
                              "' (expected linear or gaussian)");
}

std::string to_string(KernelKind kind) {
  return kind == KernelKind::linear ? "linear" : "gaussian";
}

SmoothingKernel build_kernel(const EditMask& token_mask,
                             const KernelSpec& spec) {
  const DistanceField field = manhattan_distance_field(token_mask);
  switch (spec.kind) {
    case KernelKind::linear:
      return linear_kernel(field, spec.tau1, spec.tau2);
    case KernelKind::gaussian:
      return gaussian_kernel(field, spec.alpha);
  }
  throw std::logic_error("unhandled kernel kind");
}

}  // namespace bitedit
