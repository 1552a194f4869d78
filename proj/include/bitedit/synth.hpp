// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded synthetic grayscale images used as a training and test corpus.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bitedit/grid.hpp"

namespace bitedit {

enum class SynthClass { disk, stripes, gradient, checker };

inline constexpr int kSynthClassCount = 4;

SynthClass synth_class(int index);  // index modulo the class count
std::string_view to_string(SynthClass kind);

// Shape parameters (centre, radius, phase, orientation, contrast) are drawn
// from the seed; pixels are in [0,1].
Image synthetic_image(SynthClass kind, Extent extent, std::uint64_t seed);

// `count` images cycling through the classes.
std::vector<Image> synthetic_corpus(int count, Extent extent,
                                    std::uint64_t seed);

}  // namespace bitedit
