// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bitedit/rng.hpp"

namespace bitedit {

SynthClass synth_class(int index) {
  const int k = ((index % kSynthClassCount) + kSynthClassCount) % kSynthClassCount;
  return static_cast<SynthClass>(k);
}

std::string_view to_string(SynthClass kind) {
  switch (kind) {
    case SynthClass::disk: return "disk";
    case SynthClass::stripes: return "stripes";
    case SynthClass::gradient: return "gradient";
    case SynthClass::checker: return "checker";
  }
  return "unknown";
}

Image synthetic_image(SynthClass kind, Extent extent, std::uint64_t seed) {
  if (extent.height <= 0 || extent.width <= 0) {
    throw std::invalid_argument("synthetic image needs positive size");
  }
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = extent.height;
  const double w = extent.width;
  const double lo = 0.1 + 0.2 * unit(rng);
  const double hi = 0.7 + 0.2 * unit(rng);
  Image image(extent.height, extent.width);

  const double cy = h * (0.35 + 0.3 * unit(rng));
  const double cx = w * (0.35 + 0.3 * unit(rng));
  const double radius = std::min(h, w) * (0.2 + 0.15 * unit(rng));
  const double angle = std::numbers::pi * unit(rng);
  const double period = std::min(h, w) * (0.2 + 0.2 * unit(rng));
  const double phase = 2 * std::numbers::pi * unit(rng);
  const int cell = std::max(2, static_cast<int>(std::min(h, w) / (3 + 3 * unit(rng))));

  for (int i = 0; i < extent.height; ++i) {
    for (int j = 0; j < extent.width; ++j) {
      const double y = i + 0.5;
      const double x = j + 0.5;
      double t = 0.0;
      switch (kind) {
        case SynthClass::disk:
          t = std::hypot(y - cy, x - cx) <= radius ? 1.0 : 0.0;
          break;
        case SynthClass::stripes: {
          const double u = x * std::cos(angle) + y * std::sin(angle);
          t = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * u / period + phase);
          break;
        }
        case SynthClass::gradient: {
          const double u = (x / w - 0.5) * std::cos(angle) +
                           (y / h - 0.5) * std::sin(angle);
          t = std::clamp(0.5 + u, 0.0, 1.0);
          break;
        }
        case SynthClass::checker:
          t = ((i / cell) + (j / cell)) % 2 == 0 ? 1.0 : 0.0;
          break;
      }
      image(i, j) = lo + (hi - lo) * t;
    }
  }
  return image;
}

std::vector<Image> synthetic_corpus(int count, Extent extent,
                                    std::uint64_t seed) {
  std::vector<Image> out;
  for (int n = 0; n < count; ++n) {
    out.push_back(synthetic_image(synth_class(n), extent,
                                  splitmix64(seed + static_cast<std::uint64_t>(n))));
  }
  return out;
}

}  // namespace bitedit
