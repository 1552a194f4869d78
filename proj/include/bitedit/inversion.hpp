// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Inversion of a source token pyramid: first the learnable prompt rows are
// fitted with the predictor frozen, then low-rank feed-forward adapters are
// fitted with the prompt frozen.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bitedit/predictor.hpp"

namespace bitedit {

struct InversionConfig {
  int stage1_iterations = 10;
  int stage2_iterations = 20;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.97;
  double weight_decay = 0.01;
  int lora_rank = 4;
  double kl_weight = 0.1;
  int learnable_tokens = 20;
  // Stddev of the noise added to the copied prompt row at initialization.
  double prompt_init_noise = 0.02;
  std::uint64_t seed = 0;

  // lr 1e-2, sized for the small predictor.
  static InversionConfig toy();
  // lr 4.6875e-5, sized for a large pretrained predictor.
  static InversionConfig paper();
  static InversionConfig preset(const std::string& name);

  void validate() const;
};

struct InversionRecord {
  int iteration = 0;  // 0 is the state before the first update
  int stage = 1;
  double ce = 0.0;
  double kl = 0.0;
  double bit_accuracy = 0.0;
};

// Learnable prompt rows and adapter produced by inversion.
struct Adaptation {
  Matrix learnable;
  std::optional<LowRankAdapter> adapter;
};

struct PromptStageResult {
  Matrix learnable;
  InversionRecord initial;
  std::vector<InversionRecord> trace;  // one record after each update
};

struct AdapterStageResult {
  LowRankAdapter adapter;
  InversionRecord initial;
  std::vector<InversionRecord> trace;
};

struct InversionResult {
  PromptStageResult prompt_stage;
  AdapterStageResult adapter_stage;
  double bit_accuracy = 0.0;  // teacher-forced greedy, after both stages

  Adaptation adaptation() const;
  // Initial and per-update records of both stages, in order.
  std::vector<InversionRecord> records() const;
};

// Teacher-forced per-bit cross entropy of `pyramid` under (params, prompt).
double inversion_loss(const PredictorParams& params,
                      const PromptEmbedding& prompt,
                      const TokenPyramid& pyramid);

// Fixed rows from `ids` plus learnable rows initialized from the first fixed
// row with small seeded noise.
PromptEmbedding initial_prompt(const PredictorParams& params,
                               std::span<const int> ids,
                               const InversionConfig& config);

PromptStageResult optimize_prompt(const PredictorParams& params,
                                  const PromptEmbedding& init,
                                  const TokenPyramid& source,
                                  const InversionConfig& config);

// `params` is the base predictor; any adapter it carries is ignored.
AdapterStageResult optimize_lora(const PredictorParams& params,
                                 const PromptEmbedding& prompt,
                                 const TokenPyramid& source,
                                 const InversionConfig& config);

InversionResult invert(const PredictorParams& params, std::span<const int> ids,
                       const TokenPyramid& source,
                       const InversionConfig& config);

PredictorParams with_adapter(PredictorParams params,
                             std::optional<LowRankAdapter> adapter);

struct GradientCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  double kl_weight = 0.1;
  // Relative errors use max(|analytic|, |numeric|, floor) as denominator.
  double floor = 1e-8;
  bool prompt = true;
  bool adapter = true;
  bool base = false;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "tensor[index]" of the largest error
  bool passed = false;
};

// Central finite differences of the inversion objective for every learnable
// prompt scalar, adapter scalar and, optionally, base scalar.
GradientCheckReport check_gradients(const PredictorParams& params,
                                    const PromptEmbedding& prompt,
                                    const TokenPyramid& source,
                                    const GradientCheckOptions& options = {});

}  // namespace bitedit
