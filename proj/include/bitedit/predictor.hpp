// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

// Small next-scale token predictor.
//
// Every position of scale k is processed independently:
//
//   x      = context * W_in + b_in + position[k, i, j] + scale[k]
//   attn   = softmax((x Wq)(P Wk)^T / sqrt(m))         P = prompt rows
//   h      = x + (attn (P Wv)) Wo
//   y      = h + gelu(h W1' + b1) W2' + b2
//   logits = y * head + head_bias                      one logit per bit
//
// W1' = W1 + A1 B1 and W2' = W2 + A2 B2 when a low-rank adapter is installed.
// The d logits are independent Bernoulli classifiers, one per token bit.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bitedit/bsq.hpp"
#include "bitedit/grid.hpp"

namespace bitedit {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

struct PredictorShape {
  int width = 32;  // model width m
  int depth = 16;  // token bits d
  int vocab = 8;   // symbolic prompt ids
  ScaleSchedule schedule;

  int hidden() const { return 4 * width; }
  void validate() const;
  bool operator==(const PredictorShape&) const = default;
};

struct LowRankAdapter {
  Matrix a1;  // m x r
  Matrix b1;  // r x 4m
  Matrix a2;  // 4m x r
  Matrix b2;  // r x m

  int rank() const { return static_cast<int>(a1.cols()); }
  bool operator==(const LowRankAdapter& other) const;

  // A uniform in +-1/sqrt(fan_in), B zero.
  static LowRankAdapter init(const PredictorShape& shape, int rank,
                             std::uint64_t seed);
  static LowRankAdapter zeros(const PredictorShape& shape, int rank);
};

struct PredictorParams {
  PredictorShape shape;
  Matrix prompt_table;  // vocab x m
  Matrix position;      // total_positions x m, scales stacked coarse-to-fine
  Matrix scale;         // K x m
  Matrix w_in;          // d x m
  RowVector b_in;
  Matrix wq, wk, wv, wo;  // m x m
  Matrix w1;              // m x 4m
  RowVector b1;
  Matrix w2;  // 4m x m
  RowVector b2;
  Matrix head;  // m x d
  RowVector head_bias;
  std::optional<LowRankAdapter> adapter;

  static PredictorParams zeros(const PredictorShape& shape);
  // Head and head bias start at zero so every bit starts at probability 1/2.
  static PredictorParams init(const PredictorShape& shape, std::uint64_t seed);

  // First row of scale k in `position`.
  std::size_t position_offset(std::size_t k) const;
  bool all_finite() const;
  // Exact value equality of every tensor.
  bool operator==(const PredictorParams& other) const;
};

// Visits the base tensors in serialization order as (name, tensor&).
template <class Params, class Fn>
void for_each_base_tensor(Params& p, Fn&& fn) {
  fn("prompt_table", p.prompt_table);
  fn("position", p.position);
  fn("scale", p.scale);
  fn("w_in", p.w_in);
  fn("b_in", p.b_in);
  fn("wq", p.wq);
  fn("wk", p.wk);
  fn("wv", p.wv);
  fn("wo", p.wo);
  fn("w1", p.w1);
  fn("b1", p.b1);
  fn("w2", p.w2);
  fn("b2", p.b2);
  fn("head", p.head);
  fn("head_bias", p.head_bias);
}

template <class Adapter, class Fn>
void for_each_adapter_tensor(Adapter& a, Fn&& fn) {
  fn("lora_a1", a.a1);
  fn("lora_b1", a.b1);
  fn("lora_a2", a.a2);
  fn("lora_b2", a.b2);
}

// W + A B for both feed-forward matrices (W itself without an adapter).
std::pair<Matrix, Matrix> effective_ffn_weights(const PredictorParams& params);

// Conditioning rows: a fixed part looked up from symbolic prompt ids,
// followed by learnable rows.
class PromptEmbedding {
 public:
  PromptEmbedding() = default;
  PromptEmbedding(Matrix fixed, Matrix learnable);

  static PromptEmbedding from_ids(const PredictorParams& params,
                                  std::span<const int> ids,
                                  Matrix learnable = {});

  int fixed_count() const { return static_cast<int>(fixed_.rows()); }
  int learnable_count() const { return static_cast<int>(learnable_.rows()); }
  int size() const { return fixed_count() + learnable_count(); }
  int width() const { return static_cast<int>(fixed_.cols()); }

  const Matrix& fixed() const { return fixed_; }
  const Matrix& learnable() const { return learnable_; }
  void set_learnable(Matrix learnable);

  Matrix rows() const;

  bool operator==(const PromptEmbedding& other) const;

 private:
  Matrix fixed_;
  Matrix learnable_;
};

class LogitsMap : public FeatureMap {
 public:
  using FeatureMap::FeatureMap;
  explicit LogitsMap(FeatureMap map) : FeatureMap(std::move(map)) {}
};

// `scale` is zero-based. `context` must have the extent of that scale.
LogitsMap predict_next_scale(const PredictorParams& params,
                             const PromptEmbedding& prompt,
                             const FeatureMap& context, std::size_t scale);

// Softmax weight on prompt row `row` at every position of `scale`.
FeatureMap cross_attention_map(const PredictorParams& params,
                               const PromptEmbedding& prompt,
                               const FeatureMap& context, std::size_t scale,
                               int row);

enum class SamplingMode { greedy, bernoulli };

struct Sampling {
  SamplingMode mode = SamplingMode::greedy;
  std::uint64_t seed = 0;
};

SamplingMode parse_sampling_mode(std::string_view name);

// Greedy: bit set iff logit >= 0. Bernoulli: bit set with probability
// sigmoid(logit), drawn from a counter-based stream keyed by (seed, scale).
TokenMap sample_tokens(const LogitsMap& logits, const Sampling& sampling,
                       std::size_t scale = 0);

// Context for scale k: the cumulative full-resolution feature resampled to
// the extent of scale k.
FeatureMap scale_context(const FeatureMap& cumulative, Extent extent);

// Plain conditional generation of a whole pyramid.
TokenPyramid generate(const PredictorParams& params,
                      const PromptEmbedding& prompt, const Sampling& sampling);

double sigmoid(double x);
double softplus(double x);

// Ground-truth contexts and bit targets for every scale of a pyramid.
struct TeacherForcing {
  ScaleSchedule schedule;
  int depth = 0;
  std::vector<FeatureMap> contexts;
  std::vector<Matrix> targets;  // (h_k w_k) x d of 0/1

  static TeacherForcing from(const TokenPyramid& pyramid);
};

struct LossBreakdown {
  double ce = 0.0;
  double kl = 0.0;
  double total = 0.0;
  double bit_accuracy = 0.0;
};

struct LossTerms {
  double kl_weight = 0.0;
  // Per-scale logits of the frozen reference model; required when
  // kl_weight > 0.
  const std::vector<Matrix>* reference_logits = nullptr;
};

struct GradientRequest {
  bool prompt = false;
  bool base = false;
  bool adapter = false;

  bool any() const { return prompt || base || adapter; }
};

// Same shapes as the parameters they differentiate. `params.adapter` holds
// adapter gradients when requested.
struct Gradients {
  PredictorParams params;
  Matrix prompt;

  static Gradients zeros_like(const PredictorParams& params, int prompt_rows);
};

// Teacher-forced per-bit cross entropy averaged over bits, positions and
// scales, plus kl_weight times the per-bit KL(model || reference) with the
// same averaging. Gradients are accumulated into *grads when non-null.
LossBreakdown sequence_loss(const PredictorParams& params,
                            const Matrix& prompt_rows,
                            const TeacherForcing& forcing,
                            const LossTerms& terms = {},
                            const GradientRequest& request = {},
                            Gradients* grads = nullptr);

std::vector<Matrix> teacher_forced_logits(const PredictorParams& params,
                                          const Matrix& prompt_rows,
                                          const TeacherForcing& forcing);

struct TrainingSample {
  std::vector<int> prompt_ids;
  TokenPyramid pyramid;
};

struct TrainingConfig {
  int iterations = 600;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.0;
  // Training stops early once the mean loss is at or below this value and
  // every teacher-forced bit is predicted correctly.
  double target_loss = 0.02;
  std::uint64_t seed = 0;
};

struct TrainingOutcome {
  PredictorParams params;
  std::vector<double> loss_trace;  // loss before each update
  double final_loss = 0.0;
  double final_bit_accuracy = 0.0;
};

TrainingOutcome train_predictor(std::span<const TrainingSample> dataset,
                                const PredictorShape& shape,
                                const TrainingConfig& config);

}  // namespace bitedit
