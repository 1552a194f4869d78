// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Multi-scale token-blending editor.
//
// At every scale the predictor proposes target tokens; they are upsampled to
// the full token grid and blended with the upsampled source tokens,
//
//   E_k = up(R_tar_k) * (1 - G) + up(R_src_k) * G,
//
// and the running sum of E_k is the context for the next scale. The edited
// image is the decoded sum of all E_k.

#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "bitedit/bsq.hpp"
#include "bitedit/inversion.hpp"
#include "bitedit/kernel.hpp"
#include "bitedit/predictor.hpp"

namespace bitedit {

enum class EditMode {
  autoregressive,      // blend at every scale, blended context propagates
  non_autoregressive,  // generate all scales unblended, blend at the end
};

EditMode parse_edit_mode(std::string_view name);  // "ar" | "nar"
std::string_view to_string(EditMode mode);

struct EditSession {
  std::shared_ptr<const PredictorParams> params;  // adapter installed
  PromptEmbedding prompt;
  TokenPyramid source;
  SmoothingKernel kernel;  // full token grid
  EditMode mode = EditMode::autoregressive;
  Sampling sampling;
  CodecSettings codec;

  void validate() const;
  bool operator==(const EditSession& other) const;
};

struct EditResult {
  std::vector<FeatureMap> edited;  // E_1..E_K on the full token grid
  TokenPyramid target;             // tokens proposed by the predictor
  FeatureMap features;             // sum of E_k
  Image image;
};

EditResult edit(const EditSession& session);
EditResult edit_nar(const EditSession& session);
// Dispatches on session.mode.
EditResult run_edit(const EditSession& session);

struct EditRequest {
  Image source;
  EditMask pixel_mask;  // non-zero = edit region, image resolution
  std::vector<int> prompt_ids;  // target prompt id, instruction id
  KernelSpec kernel;
  EditMode mode = EditMode::autoregressive;
  Sampling sampling;
  CodecSettings codec;
};

// Tokenizes the source, maps the mask onto the token grid, builds the kernel
// and installs the learnable prompt rows and adapter from `adaptation`.
EditSession make_session(const PredictorParams& params,
                         const EditRequest& request,
                         const Adaptation& adaptation);

}  // namespace bitedit
