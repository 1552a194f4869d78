// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Full-reference image metrics on [0,1] grayscale images, optionally
// restricted to a region (non-zero mask cells).

#pragma once

#include <string>

#include "bitedit/grid.hpp"
#include "bitedit/kernel.hpp"

namespace bitedit {

inline constexpr double kPsnrCapDb = 99.0;

double mse(const Image& a, const Image& b, const EditMask* region = nullptr);

// 10 log10(1 / mse), capped at kPsnrCapDb once mse < 1e-10.
double psnr_from_mse(double mse);
double psnr(const Image& a, const Image& b, const EditMask* region = nullptr);

// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range 1. Averaged over windows that fit entirely in the
// image and whose centre lies in the region.
double ssim(const Image& a, const Image& b, const EditMask* region = nullptr);

struct MetricReport {
  std::string region = "whole";
  double psnr = 0.0;
  double mse = 0.0;
  double ssim = 0.0;
};

MetricReport evaluate(const Image& a, const Image& b,
                      const EditMask* region = nullptr,
                      std::string region_name = "whole");

}  // namespace bitedit
