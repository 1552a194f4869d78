// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Plain-text run configuration: one `key = value` per line, '#' starts a
// comment. Unknown and repeated keys are errors.
//
//   schedule            1x1,2x2,4x4 (default: ramp ending at the token grid)
//   patch, gain         codec settings; token depth is patch^2
//   width, vocab        predictor shape
//   instruction_id      prompt id appended after the target id (default vocab-1)
//   kernel              linear | gaussian
//   tau1, tau2, alpha   kernel parameters
//   mode                ar | nar
//   sampling            greedy | bernoulli
//   preset              toy | paper (inversion optimizer)
//   stage1_iterations, stage2_iterations, learning_rate, beta1, beta2,
//   weight_decay, lora_rank, kl_weight, learnable_tokens, prompt_init_noise
//   train_iterations, train_learning_rate, train_target_loss, train_samples
//   predictor           path of a BQPM predictor
//
// Seeds are not config keys; stochastic commands take them as flags.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "bitedit/editor.hpp"
#include "bitedit/grid.hpp"
#include "bitedit/inversion.hpp"
#include "bitedit/kernel.hpp"
#include "bitedit/predictor.hpp"

namespace bitedit {

struct RunConfig {
  std::optional<ScaleSchedule> schedule;
  CodecSettings codec;
  int width = 32;
  int vocab = 8;
  std::optional<int> instruction_id;
  KernelSpec kernel;
  EditMode mode = EditMode::autoregressive;
  SamplingMode sampling = SamplingMode::greedy;
  std::string preset = "toy";
  InversionConfig inversion = InversionConfig::toy();
  TrainingConfig training;
  int train_samples = 4;
  std::string predictor;

  // Explicit schedule, or the default ramp for the token grid of `image`.
  ScaleSchedule schedule_for(Extent image) const;
  int instruction() const { return instruction_id.value_or(vocab - 1); }
  PredictorShape predictor_shape(Extent image) const;

  static RunConfig parse(std::istream& in);
  static RunConfig parse_string(const std::string& text);
  static RunConfig load(const std::string& path);
};

}  // namespace bitedit
