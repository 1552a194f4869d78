// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Binary spherical quantization and multi-scale residual tokenization.
//
// A token is a d-bit word (d <= 64). Bit b set means component b of the
// dequantized vector is +1/sqrt(d), cleared means -1/sqrt(d), so every
// dequantized token lies on the unit sphere.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bitedit/grid.hpp"

namespace bitedit {

using TokenWord = std::uint64_t;

inline constexpr int kMaxTokenDepth = 64;

// Sign pattern of z; zero components map to a set bit.
TokenWord quantize_bsq(std::span<const double> z);
std::vector<double> dequantize(TokenWord word, int depth);
void dequantize_into(TokenWord word, std::span<double> out);

class TokenMap {
 public:
  TokenMap() = default;
  TokenMap(Extent extent, int depth);
  TokenMap(Extent extent, int depth, std::vector<TokenWord> words);

  Extent extent() const { return extent_; }
  int height() const { return extent_.height; }
  int width() const { return extent_.width; }
  int depth() const { return depth_; }

  TokenWord& operator()(int i, int j) { return words_[index(i, j)]; }
  TokenWord operator()(int i, int j) const { return words_[index(i, j)]; }
  bool bit(int i, int j, int b) const { return ((*this)(i, j) >> b) & 1u; }

  std::span<const TokenWord> words() const { return words_; }
  std::span<TokenWord> words() { return words_; }

  bool operator==(const TokenMap&) const = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * extent_.width + j;
  }

  Extent extent_;
  int depth_ = 0;
  std::vector<TokenWord> words_;
};

// Per-position quantization of a feature map.
TokenMap quantize_map(const FeatureMap& z);
FeatureMap dequantize_map(const TokenMap& tokens);

class TokenPyramid {
 public:
  TokenPyramid() = default;
  TokenPyramid(ScaleSchedule schedule, std::vector<TokenMap> maps);

  const ScaleSchedule& schedule() const { return schedule_; }
  std::size_t size() const { return maps_.size(); }
  int depth() const { return maps_.empty() ? 0 : maps_.front().depth(); }
  const TokenMap& operator[](std::size_t k) const { return maps_[k]; }
  std::span<const TokenMap> maps() const { return maps_; }

  bool operator==(const TokenPyramid&) const = default;

 private:
  ScaleSchedule schedule_;
  std::vector<TokenMap> maps_;
};

// Contribution of one scale to the full-resolution cumulative feature.
FeatureMap upsample_tokens(const TokenMap& tokens, Extent full);

struct Tokenization {
  TokenPyramid pyramid;
  FeatureMap reconstruction;  // F_K
  // ||F - F_k||^2 for k = 1..K.
  std::vector<double> residual_energy;
};

Tokenization tokenize(const FeatureMap& features,
                      const ScaleSchedule& schedule);

FeatureMap reconstruct(const TokenPyramid& pyramid);

}  // namespace bitedit
