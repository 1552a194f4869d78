// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/bsq.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bitedit {

namespace {

void check_depth(int depth) {
  if (depth <= 0 || depth > kMaxTokenDepth) {
    throw std::invalid_argument("token depth must be in [1, 64], got " +
                                std::to_string(depth));
  }
}

}  // namespace

TokenWord quantize_bsq(std::span<const double> z) {
  check_depth(static_cast<int>(z.size()));
  TokenWord word = 0;
  for (std::size_t b = 0; b < z.size(); ++b) {
    if (z[b] >= 0.0) word |= TokenWord{1} << b;
  }
  return word;
}

void dequantize_into(TokenWord word, std::span<double> out) {
  check_depth(static_cast<int>(out.size()));
  const double mag = 1.0 / std::sqrt(static_cast<double>(out.size()));
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b] = ((word >> b) & 1u) ? mag : -mag;
  }
}

std::vector<double> dequantize(TokenWord word, int depth) {
  check_depth(depth);
  std::vector<double> out(depth);
  dequantize_into(word, out);
  return out;
}

TokenMap::TokenMap(Extent extent, int depth)
    : extent_(extent), depth_(depth), words_(extent.area(), 0) {
  check_depth(depth);
  if (extent.height <= 0 || extent.width <= 0) {
    throw std::invalid_argument("token map extent must be positive");
  }
}

TokenMap::TokenMap(Extent extent, int depth, std::vector<TokenWord> words)
    : extent_(extent), depth_(depth), words_(std::move(words)) {
  check_depth(depth);
  if (extent.height <= 0 || extent.width <= 0) {
    throw std::invalid_argument("token map extent must be positive");
  }
  if (words_.size() != extent.area()) {
    throw std::invalid_argument("token word count does not match extent");
  }
  if (depth < 64) {
    const TokenWord mask = (TokenWord{1} << depth) - 1;
    for (TokenWord w : words_) {
      if (w & ~mask) {
        throw std::invalid_argument("token word has bits above depth");
      }
    }
  }
}

TokenMap quantize_map(const FeatureMap& z) {
  TokenMap out(z.extent(), z.depth());
  for (int i = 0; i < z.height(); ++i) {
    for (int j = 0; j < z.width(); ++j) out(i, j) = quantize_bsq(z.at(i, j));
  }
  return out;
}

FeatureMap dequantize_map(const TokenMap& tokens) {
  FeatureMap out(tokens.height(), tokens.width(), tokens.depth());
  for (int i = 0; i < tokens.height(); ++i) {
    for (int j = 0; j < tokens.width(); ++j) {
      dequantize_into(tokens(i, j), out.at(i, j));
    }
  }
  return out;
}

TokenPyramid::TokenPyramid(ScaleSchedule schedule, std::vector<TokenMap> maps)
    : schedule_(std::move(schedule)), maps_(std::move(maps)) {
  if (maps_.empty()) {
    throw std::invalid_argument("token pyramid must have at least one scale");
  }
  if (maps_.size() != schedule_.size()) {
    throw std::invalid_argument("token pyramid has " +
                                std::to_string(maps_.size()) +
                                " maps but schedule has " +
                                std::to_string(schedule_.size()) + " scales");
  }
  for (std::size_t k = 0; k < maps_.size(); ++k) {
    if (maps_[k].extent() != schedule_[k]) {
      throw std::invalid_argument("token map " + std::to_string(k + 1) +
                                  " does not match schedule extent " +
                                  to_string(schedule_[k]));
    }
    if (maps_[k].depth() != maps_.front().depth()) {
      throw std::invalid_argument("token maps disagree on depth");
    }
  }
}

FeatureMap upsample_tokens(const TokenMap& tokens, Extent full) {
  return bilinear_resample(dequantize_map(tokens), full);
}

Tokenization tokenize(const FeatureMap& features,
                      const ScaleSchedule& schedule) {
  if (schedule.size() == 0) {
    throw std::invalid_argument("empty scale schedule");
  }
  if (features.extent() != schedule.full()) {
    throw std::invalid_argument("feature map " + to_string(features.extent()) +
                                " does not match schedule resolution " +
                                to_string(schedule.full()));
  }
  check_depth(features.depth());

  const Extent full = schedule.full();
  FeatureMap cumulative(full.height, full.width, features.depth());
  std::vector<TokenMap> maps;
  std::vector<double> energy;
  maps.reserve(schedule.size());
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const FeatureMap z = bilinear_resample(features - cumulative, schedule[k]);
    maps.push_back(quantize_map(z));
    cumulative += upsample_tokens(maps.back(), full);
    energy.push_back((features - cumulative).squared_norm());
  }
  return {TokenPyramid(schedule, std::move(maps)), std::move(cumulative),
          std::move(energy)};
}

FeatureMap reconstruct(const TokenPyramid& pyramid) {
  if (pyramid.size() == 0) {
    throw std::invalid_argument("cannot reconstruct an empty pyramid");
  }
  const Extent full = pyramid.schedule().full();
  FeatureMap cumulative(full.height, full.width, pyramid.depth());
  for (const auto& tokens : pyramid.maps()) {
    cumulative += upsample_tokens(tokens, full);
  }
  return cumulative;
}

}  // namespace bitedit
