// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Binary file formats. All integers are little-endian u32 unless noted and
// all tensors are stored as little-endian float32.
//
//   BQFM  feature map     "BQFM" u8 version, h, w, d, h*w*d values
//   BQTK  token pyramid   "BQTK" u8 version, K, d, K x (h, w), packed bits
//   BQPM  predictor       "BQPM" u8 version, m, d, n_p, r, vocab, K,
//                         K x (h, w), base tensors (vocab > 0),
//                         learnable rows (n_p > 0), adapter (r > 0)
//   BQEP  edited pyramid  "BQEP" u8 version, K, h, w, d, K x h*w*d values
//
// Token bits are written as one stream per scale: bit b of the token at
// row-major position n is stream bit n*d + b, packed LSB-first, and every
// scale starts on a byte boundary. A BQPM file with vocab 0 is an inversion
// sidecar that carries no base weights.

#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bitedit/bsq.hpp"
#include "bitedit/grid.hpp"
#include "bitedit/inversion.hpp"
#include "bitedit/kernel.hpp"
#include "bitedit/predictor.hpp"

namespace bitedit {

// Unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_feature_map(std::ostream& out, const FeatureMap& map);
FeatureMap read_feature_map(std::istream& in);
void save_feature_map(const std::string& path, const FeatureMap& map);
FeatureMap load_feature_map(const std::string& path);

void write_pyramid(std::ostream& out, const TokenPyramid& pyramid);
TokenPyramid read_pyramid(std::istream& in);
void save_pyramid(const std::string& path, const TokenPyramid& pyramid);
TokenPyramid load_pyramid(const std::string& path);

struct ModelFile {
  PredictorShape shape;  // vocab is 0 for a sidecar
  std::optional<PredictorParams> base;
  Adaptation adaptation;
};

void write_model(std::ostream& out, const ModelFile& model);
ModelFile read_model(std::istream& in);
void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

// Base weights only (an installed adapter is stored too).
void save_predictor(const std::string& path, const PredictorParams& params);
PredictorParams load_predictor(const std::string& path);
// Learnable rows and adapter of an inversion, no base weights.
void save_sidecar(const std::string& path, const PredictorShape& shape,
                  const Adaptation& adaptation);
Adaptation load_sidecar(const std::string& path, const PredictorShape& shape);

void write_edited(std::ostream& out, const std::vector<FeatureMap>& edited);
std::vector<FeatureMap> read_edited(std::istream& in);
void save_edited(const std::string& path, const std::vector<FeatureMap>& edited);
std::vector<FeatureMap> load_edited(const std::string& path);

// Binary PGM (P5). Pixels are value / maxval on read and round(255 v) on
// write, with v clamped to [0,1].
void write_pgm(std::ostream& out, const Image& image);
Image read_pgm(std::istream& in);
void save_pgm(const std::string& path, const Image& image);
Image load_pgm(const std::string& path);

// Grayscale replicated into three channels (P6).
void save_ppm(const std::string& path, const Image& image);

// Mask PGMs: dark pixels (< 128) are the edit region. Written as 0 for the
// edit region and 255 elsewhere.
EditMask mask_from_image(const Image& image);
Image mask_to_image(const EditMask& mask);
void save_mask(const std::string& path, const EditMask& mask);
EditMask load_mask(const std::string& path);

}  // namespace bitedit
