// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <vector>

#include "bitedit/bsq.hpp"
#include "bitedit/editor.hpp"
#include "bitedit/inversion.hpp"
#include "bitedit/predictor.hpp"
#include "bitedit/synth.hpp"

namespace fixture {

using namespace bitedit;

inline void fill_gaussian(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
}

inline void fill_gaussian(RowVector& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
}

inline TokenPyramid random_pyramid(const ScaleSchedule& s, int d,
                                   std::mt19937_64& rng) {
  std::vector<TokenMap> maps;
  const TokenWord mask = d == 64 ? ~TokenWord{0} : (TokenWord{1} << d) - 1;
  for (const Extent& e : s.scales()) {
    TokenMap t(e, d);
    for (auto& w : t.words()) w = rng() & mask;
    maps.push_back(std::move(t));
  }
  return TokenPyramid(s, std::move(maps));
}

// m = 8, d = 4, scales 1x1 and 2x2, every tensor random (including the head
// and biases, which start at zero in PredictorParams::init).
struct Small {
  PredictorParams params;
  PromptEmbedding prompt;
  TokenPyramid pyramid;
};

inline Small small_instance(std::uint64_t seed, bool adapter = true,
                            int learnable = 3) {
  std::mt19937_64 rng(seed);
  const PredictorShape shape{8, 4, 5, ScaleSchedule::parse("1x1,2x2")};
  Small s;
  s.params = PredictorParams::init(shape, seed);
  fill_gaussian(s.params.head, 0.5, rng);
  fill_gaussian(s.params.head_bias, 0.3, rng);
  fill_gaussian(s.params.b_in, 0.3, rng);
  fill_gaussian(s.params.b1, 0.3, rng);
  fill_gaussian(s.params.b2, 0.3, rng);
  if (adapter) {
    LowRankAdapter a = LowRankAdapter::init(shape, 2, seed + 1);
    fill_gaussian(a.b1, 0.3, rng);
    fill_gaussian(a.b2, 0.3, rng);
    s.params.adapter = a;
  }
  Matrix extra(learnable, shape.width);
  fill_gaussian(extra, 1.0, rng);
  const std::vector<int> ids{1, 4};
  s.prompt = PromptEmbedding::from_ids(s.params, ids, extra);
  s.pyramid = random_pyramid(shape.schedule, shape.depth, rng);
  return s;
}

// A predictor trained on `samples` synthetic images of `size` pixels, prompt
// ids {n, vocab-1}. Returns the params and the training pyramids.
struct Trained {
  PredictorParams params;
  std::vector<TrainingSample> data;
  TrainingOutcome outcome;
};

inline Trained trained_predictor(int size, int samples, std::uint64_t seed) {
  const auto corpus = synthetic_corpus(samples, {size, size}, seed);
  PredictorShape shape{32, 16, 8, ScaleSchedule::ramp({size / 4, size / 4})};
  Trained t;
  for (int n = 0; n < samples; ++n) {
    t.data.push_back({{n, shape.vocab - 1},
                      tokenize(encode_image(corpus[n]), shape.schedule).pyramid});
  }
  TrainingConfig cfg;
  cfg.seed = seed;
  t.outcome = train_predictor(t.data, shape, cfg);
  t.params = t.outcome.params;
  return t;
}

// Two scales (1x1, 2x2), d = m = 4, patch 2. Attention and feed-forward
// weights are zero and w_in = head = I, so the logits are
// context + (0.1, -0.1, 0.1, -0.1): the target tokens depend on the blended
// context, which is what separates AR from NAR editing. Source tokens are
// all-clear at scale 1 and all-set at scale 2.
inline EditSession hand_session(SmoothingKernel kernel,
                                EditMode mode = EditMode::autoregressive) {
  const PredictorShape shape{4, 4, 2, ScaleSchedule::parse("1x1,2x2")};
  auto p = std::make_shared<PredictorParams>(PredictorParams::zeros(shape));
  p->w_in = Matrix::Identity(4, 4);
  p->head = Matrix::Identity(4, 4);
  p->head_bias << 0.1, -0.1, 0.1, -0.1;
  p->prompt_table.setOnes();
  EditSession s;
  s.params = p;
  s.prompt = PromptEmbedding::from_ids(*p, std::vector<int>{0});
  s.source = TokenPyramid(
      shape.schedule, {TokenMap({1, 1}, 4, {0x0}),
                       TokenMap({2, 2}, 4, std::vector<TokenWord>(4, 0xF))});
  s.kernel = std::move(kernel);
  s.mode = mode;
  s.codec = {2, 1.0};
  return s;
}

inline SmoothingKernel mixed_kernel() {
  return SmoothingKernel(2, 2, std::vector<double>{0.0, 0.5, 1.0, 0.75});
}

}  // namespace fixture
