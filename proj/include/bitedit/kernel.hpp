// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Edit masks, exact L1 distance fields and the blend-weight kernels built on
// them. Kernel value 0 means "take generated content", 1 means "keep source".

#pragma once

#include <cstdint>
#include <string>

#include "bitedit/grid.hpp"

namespace bitedit {

// Non-zero cells are the edit region.
class EditMask : public Grid<std::uint8_t> {
 public:
  using Grid<std::uint8_t>::Grid;

  std::size_t foreground_count() const;
  bool empty() const { return foreground_count() == 0; }
  EditMask complement() const;
};

class DistanceField : public Grid<int> {
 public:
  using Grid<int>::Grid;
};

class SmoothingKernel : public Grid<double> {
 public:
  using Grid<double>::Grid;
};

// Exact Manhattan distance to the nearest edit cell (two-pass DP).
DistanceField manhattan_distance_field(const EditMask& mask);

// 0 for d <= tau1, 1 for d >= tau2, linear in between.
SmoothingKernel linear_kernel(const DistanceField& field, double tau1,
                              double tau2);

// 1 - exp(-d^2 / (2 alpha^2)).
SmoothingKernel gaussian_kernel(const DistanceField& field, double alpha);

SmoothingKernel constant_kernel(Extent extent, double value);

// Foreground where attention > threshold (strict).
EditMask mask_from_attention(const FeatureMap& attention, double threshold);

// A token cell is foreground iff any pixel in its patch is foreground.
EditMask mask_to_token_grid(const EditMask& pixels, Extent tokens, int patch);

enum class KernelKind { linear, gaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double tau1 = 1.0;
  double tau2 = 4.0;
  double alpha = 2.0;
};

KernelKind parse_kernel_kind(const std::string& name);
std::string to_string(KernelKind kind);

SmoothingKernel build_kernel(const EditMask& token_mask, const KernelSpec& spec);

}  // namespace bitedit
