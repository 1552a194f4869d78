// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "bitedit/optim.hpp"
#include "bitedit/rng.hpp"

namespace bitedit {

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev,
                std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix out(rows, cols);
  for (Eigen::Index n = 0; n < out.size(); ++n) out.data()[n] = dist(rng);
  return out;
}

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double bound,
               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix out(rows, cols);
  for (Eigen::Index n = 0; n < out.size(); ++n) out.data()[n] = dist(rng);
  return out;
}

constexpr double kGeluCoeff = 0.044715;
const double kGeluScale = std::sqrt(2.0 / std::numbers::pi);

double gelu(double u) {
  return 0.5 * u * (1.0 + std::tanh(kGeluScale * (u + kGeluCoeff * u * u * u)));
}

double gelu_grad(double u) {
  const double t = std::tanh(kGeluScale * (u + kGeluCoeff * u * u * u));
  return 0.5 * (1.0 + t) +
         0.5 * u * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCoeff * u * u);
}

Eigen::Map<const Matrix> as_matrix(const FeatureMap& map) {
  return {map.data().data(), static_cast<Eigen::Index>(map.extent().area()),
          map.depth()};
}

void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double top = row.maxCoeff();
    row = (row.array() - top).exp().matrix();
    row /= row.sum();
  }
}

// Activations of one scale, kept for the backward pass.
struct ScaleCache {
  Matrix x, q, keys, values, attn, o, h, u, g, y, logits;
};

void check_inputs(const PredictorParams& params, const Matrix& prompt,
                  const FeatureMap& context, std::size_t k) {
  const auto& shape = params.shape;
  if (k >= shape.schedule.size()) {
    throw std::invalid_argument("scale index " + std::to_string(k) +
                                " out of range");
  }
  if (context.extent() != shape.schedule[k]) {
    throw std::invalid_argument("context " + to_string(context.extent()) +
                                " does not match scale extent " +
                                to_string(shape.schedule[k]));
  }
  if (context.depth() != shape.depth) {
    throw std::invalid_argument("context depth does not match predictor");
  }
  if (prompt.rows() < 1 || prompt.cols() != shape.width) {
    throw std::invalid_argument("prompt rows must be non-empty with width " +
                                std::to_string(shape.width));
  }
}

void attend(const PredictorParams& p, const Matrix& prompt,
            const FeatureMap& context, std::size_t k, ScaleCache& c) {
  const Eigen::Index n = static_cast<Eigen::Index>(context.extent().area());
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(p.shape.width));
  c.x.noalias() = as_matrix(context) * p.w_in;
  c.x.rowwise() += p.b_in + p.scale.row(static_cast<Eigen::Index>(k));
  c.x += p.position.middleRows(
      static_cast<Eigen::Index>(p.position_offset(k)), n);
  c.q.noalias() = c.x * p.wq;
  c.keys.noalias() = prompt * p.wk;
  c.values.noalias() = prompt * p.wv;
  c.attn.noalias() = c.q * c.keys.transpose();
  c.attn *= inv_sqrt_m;
  softmax_rows(c.attn);
}

void forward_scale(const PredictorParams& p, const Matrix& w1e,
                   const Matrix& w2e, const Matrix& prompt,
                   const FeatureMap& context, std::size_t k, ScaleCache& c) {
  attend(p, prompt, context, k, c);
  c.o.noalias() = c.attn * c.values;
  c.h = c.x;
  c.h.noalias() += c.o * p.wo;
  c.u.noalias() = c.h * w1e;
  c.u.rowwise() += p.b1;
  c.g = c.u.unaryExpr([](double v) { return gelu(v); });
  c.y = c.h;
  c.y.noalias() += c.g * w2e;
  c.y.rowwise() += p.b2;
  c.logits.noalias() = c.y * p.head;
  c.logits.rowwise() += p.head_bias;
}

struct FfnGradients {
  Matrix w1;
  Matrix w2;
};

void backward_scale(const PredictorParams& p, const Matrix& w1e,
                    const Matrix& w2e, const Matrix& prompt,
                    const FeatureMap& context, std::size_t k,
                    const ScaleCache& c, const Matrix& dlogits,
                    const GradientRequest& request, Gradients& grads,
                    FfnGradients& ffn) {
  const bool weights = request.base || request.adapter;
  auto& g = grads.params;
  const Eigen::Index n = c.x.rows();
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(p.shape.width));

  const Matrix dy = dlogits * p.head.transpose();
  if (request.base) {
    g.head.noalias() += c.y.transpose() * dlogits;
    g.head_bias += dlogits.colwise().sum();
    g.b2 += dy.colwise().sum();
  }
  if (weights) ffn.w2.noalias() += c.g.transpose() * dy;

  Matrix du = dy * w2e.transpose();
  du.array() *= c.u.unaryExpr([](double v) { return gelu_grad(v); }).array();
  if (request.base) g.b1 += du.colwise().sum();
  if (weights) ffn.w1.noalias() += c.h.transpose() * du;
  if (!request.prompt && !request.base) return;

  Matrix dh = dy;
  dh.noalias() += du * w1e.transpose();
  if (request.base) g.wo.noalias() += c.o.transpose() * dh;
  const Matrix d_o = dh * p.wo.transpose();
  const Matrix dattn = d_o * c.values.transpose();
  const Matrix dvalues = c.attn.transpose() * d_o;
  Matrix ds(c.attn.rows(), c.attn.cols());
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    const double dot = c.attn.row(r).dot(dattn.row(r));
    ds.row(r) = (c.attn.row(r).array() * (dattn.row(r).array() - dot)).matrix();
  }
  ds *= inv_sqrt_m;
  const Matrix dkeys = ds.transpose() * c.q;

  if (request.prompt) {
    grads.prompt.noalias() += dkeys * p.wk.transpose();
    grads.prompt.noalias() += dvalues * p.wv.transpose();
  }
  if (!request.base) return;

  g.wk.noalias() += prompt.transpose() * dkeys;
  g.wv.noalias() += prompt.transpose() * dvalues;
  const Matrix dq = ds * c.keys;
  g.wq.noalias() += c.x.transpose() * dq;
  Matrix dx = dh;
  dx.noalias() += dq * p.wq.transpose();
  g.w_in.noalias() += as_matrix(context).transpose() * dx;
  const RowVector dx_sum = dx.colwise().sum();
  g.b_in += dx_sum;
  g.scale.row(static_cast<Eigen::Index>(k)) += dx_sum;
  g.position.middleRows(static_cast<Eigen::Index>(p.position_offset(k)), n) +=
      dx;
}

std::vector<Extent> check_forcing(const PredictorParams& params,
                                  const TeacherForcing& forcing) {
  if (forcing.schedule != params.shape.schedule) {
    throw std::invalid_argument("pyramid schedule " + forcing.schedule.str() +
                                " does not match predictor schedule " +
                                params.shape.schedule.str());
  }
  if (forcing.depth != params.shape.depth) {
    throw std::invalid_argument("pyramid depth does not match predictor");
  }
  return {forcing.schedule.scales().begin(), forcing.schedule.scales().end()};
}

template <class T>
bool same_tensor(const T& a, const T& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(RowVector& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

}  // namespace

void PredictorShape::validate() const {
  if (width <= 0) throw std::invalid_argument("model width must be positive");
  if (depth <= 0 || depth > kMaxTokenDepth) {
    throw std::invalid_argument("token depth must be in [1, 64]");
  }
  if (vocab <= 0) throw std::invalid_argument("vocabulary must be non-empty");
  if (schedule.size() == 0) {
    throw std::invalid_argument("predictor needs a scale schedule");
  }
}

bool LowRankAdapter::operator==(const LowRankAdapter& other) const {
  return same_tensor(a1, other.a1) && same_tensor(b1, other.b1) &&
         same_tensor(a2, other.a2) && same_tensor(b2, other.b2);
}

LowRankAdapter LowRankAdapter::zeros(const PredictorShape& shape, int rank) {
  if (rank <= 0) throw std::invalid_argument("adapter rank must be positive");
  const int m = shape.width;
  const int hidden = shape.hidden();
  return {Matrix::Zero(m, rank), Matrix::Zero(rank, hidden),
          Matrix::Zero(hidden, rank), Matrix::Zero(rank, m)};
}

LowRankAdapter LowRankAdapter::init(const PredictorShape& shape, int rank,
                                    std::uint64_t seed) {
  LowRankAdapter out = zeros(shape, rank);
  std::mt19937_64 rng(splitmix64(seed ^ 0x4C6F5241ull));
  out.a1 = uniform(shape.width, rank, 1.0 / std::sqrt(double(shape.width)), rng);
  out.a2 = uniform(shape.hidden(), rank, 1.0 / std::sqrt(double(shape.hidden())), rng);
  return out;
}

PredictorParams PredictorParams::zeros(const PredictorShape& shape) {
  shape.validate();
  const int m = shape.width;
  const int d = shape.depth;
  const int hidden = shape.hidden();
  PredictorParams p;
  p.shape = shape;
  p.prompt_table = Matrix::Zero(shape.vocab, m);
  p.position = Matrix::Zero(
      static_cast<Eigen::Index>(shape.schedule.total_positions()), m);
  p.scale = Matrix::Zero(static_cast<Eigen::Index>(shape.schedule.size()), m);
  p.w_in = Matrix::Zero(d, m);
  p.b_in = RowVector::Zero(m);
  p.wq = Matrix::Zero(m, m);
  p.wk = Matrix::Zero(m, m);
  p.wv = Matrix::Zero(m, m);
  p.wo = Matrix::Zero(m, m);
  p.w1 = Matrix::Zero(m, hidden);
  p.b1 = RowVector::Zero(hidden);
  p.w2 = Matrix::Zero(hidden, m);
  p.b2 = RowVector::Zero(m);
  p.head = Matrix::Zero(m, d);
  p.head_bias = RowVector::Zero(d);
  return p;
}

PredictorParams PredictorParams::init(const PredictorShape& shape,
                                      std::uint64_t seed) {
  PredictorParams p = zeros(shape);
  std::mt19937_64 rng(splitmix64(seed));
  const double m = shape.width;
  const double fan_in_w2 = shape.hidden();
  p.prompt_table = gaussian(p.prompt_table.rows(), p.prompt_table.cols(), 1.0, rng);
  p.position = gaussian(p.position.rows(), p.position.cols(), 0.5, rng);
  p.scale = gaussian(p.scale.rows(), p.scale.cols(), 0.5, rng);
  p.w_in = gaussian(shape.depth, shape.width, 1.0, rng);
  p.wq = gaussian(shape.width, shape.width, 1.0 / std::sqrt(m), rng);
  p.wk = gaussian(shape.width, shape.width, 1.0 / std::sqrt(m), rng);
  p.wv = gaussian(shape.width, shape.width, 1.0 / std::sqrt(m), rng);
  p.wo = gaussian(shape.width, shape.width, 1.0 / std::sqrt(m), rng);
  p.w1 = gaussian(shape.width, shape.hidden(), 1.0 / std::sqrt(m), rng);
  p.w2 = gaussian(shape.hidden(), shape.width, 1.0 / std::sqrt(fan_in_w2), rng);
  return p;
}

std::size_t PredictorParams::position_offset(std::size_t k) const {
  std::size_t offset = 0;
  for (std::size_t s = 0; s < k; ++s) offset += shape.schedule[s].area();
  return offset;
}

bool PredictorParams::all_finite() const {
  bool ok = true;
  for_each_base_tensor(*this, [&](std::string_view, const auto& t) {
    ok = ok && t.allFinite();
  });
  if (adapter) {
    for_each_adapter_tensor(*adapter, [&](std::string_view, const auto& t) {
      ok = ok && t.allFinite();
    });
  }
  return ok;
}

bool PredictorParams::operator==(const PredictorParams& other) const {
  if (!(shape == other.shape) || adapter != other.adapter) return false;
  std::vector<std::pair<const double*, std::pair<Eigen::Index, Eigen::Index>>> mine;
  for_each_base_tensor(*this, [&](std::string_view, const auto& t) {
    mine.push_back({t.data(), {t.rows(), t.cols()}});
  });
  bool equal = true;
  std::size_t index = 0;
  for_each_base_tensor(other, [&](std::string_view, const auto& t) {
    const auto& [data, dims] = mine[index++];
    equal = equal && dims.first == t.rows() && dims.second == t.cols() &&
            std::equal(t.data(), t.data() + t.size(), data);
  });
  return equal;
}

std::pair<Matrix, Matrix> effective_ffn_weights(const PredictorParams& params) {
  Matrix w1 = params.w1;
  Matrix w2 = params.w2;
  if (params.adapter) {
    const auto& a = *params.adapter;
    w1.noalias() += a.a1 * a.b1;
    w2.noalias() += a.a2 * a.b2;
  }
  return {std::move(w1), std::move(w2)};
}

PromptEmbedding::PromptEmbedding(Matrix fixed, Matrix learnable)
    : fixed_(std::move(fixed)), learnable_(std::move(learnable)) {
  if (learnable_.size() == 0) learnable_.resize(0, fixed_.cols());
  if (fixed_.size() == 0 && learnable_.cols() > 0) {
    fixed_.resize(0, learnable_.cols());
  }
  if (fixed_.cols() != learnable_.cols()) {
    throw std::invalid_argument("prompt parts differ in width");
  }
}

PromptEmbedding PromptEmbedding::from_ids(const PredictorParams& params,
                                          std::span<const int> ids,
                                          Matrix learnable) {
  Matrix fixed(static_cast<Eigen::Index>(ids.size()), params.shape.width);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= params.shape.vocab) {
      throw std::invalid_argument("prompt id " + std::to_string(ids[r]) +
                                  " outside vocabulary of " +
                                  std::to_string(params.shape.vocab));
    }
    fixed.row(static_cast<Eigen::Index>(r)) = params.prompt_table.row(ids[r]);
  }
  if (learnable.size() == 0) learnable.resize(0, params.shape.width);
  return PromptEmbedding(std::move(fixed), std::move(learnable));
}

void PromptEmbedding::set_learnable(Matrix learnable) {
  if (learnable.cols() != fixed_.cols()) {
    throw std::invalid_argument("learnable rows have the wrong width");
  }
  learnable_ = std::move(learnable);
}

Matrix PromptEmbedding::rows() const {
  Matrix out(fixed_.rows() + learnable_.rows(), fixed_.cols());
  out.topRows(fixed_.rows()) = fixed_;
  out.bottomRows(learnable_.rows()) = learnable_;
  return out;
}

bool PromptEmbedding::operator==(const PromptEmbedding& other) const {
  return fixed_.rows() == other.fixed_.rows() &&
         fixed_.cols() == other.fixed_.cols() &&
         learnable_.rows() == other.learnable_.rows() &&
         fixed_ == other.fixed_ && learnable_ == other.learnable_;
}

LogitsMap predict_next_scale(const PredictorParams& params,
                             const PromptEmbedding& prompt,
                             const FeatureMap& context, std::size_t scale) {
  const Matrix rows = prompt.rows();
  check_inputs(params, rows, context, scale);
  const auto [w1e, w2e] = effective_ffn_weights(params);
  ScaleCache cache;
  forward_scale(params, w1e, w2e, rows, context, scale, cache);
  const Extent e = context.extent();
  return LogitsMap(FeatureMap(
      e.height, e.width, params.shape.depth,
      std::vector<double>(cache.logits.data(),
                          cache.logits.data() + cache.logits.size())));
}

FeatureMap cross_attention_map(const PredictorParams& params,
                               const PromptEmbedding& prompt,
                               const FeatureMap& context, std::size_t scale,
                               int row) {
  if (row < 0 || row >= prompt.size()) {
    throw std::invalid_argument("prompt row " + std::to_string(row) +
                                " out of range for " +
                                std::to_string(prompt.size()) + " rows");
  }
  const Matrix rows = prompt.rows();
  check_inputs(params, rows, context, scale);
  ScaleCache cache;
  attend(params, rows, context, scale, cache);
  const Extent e = context.extent();
  FeatureMap out(e.height, e.width, 1);
  auto data = out.data();
  for (Eigen::Index n = 0; n < cache.attn.rows(); ++n) {
    data[static_cast<std::size_t>(n)] = cache.attn(n, row);
  }
  return out;
}

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "greedy") return SamplingMode::greedy;
  if (name == "bernoulli") return SamplingMode::bernoulli;
  throw std::invalid_argument("unknown sampling mode '" + std::string(name) +
                              "' (expected greedy or bernoulli)");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

TokenMap sample_tokens(const LogitsMap& logits, const Sampling& sampling,
                       std::size_t scale) {
  TokenMap out(logits.extent(), logits.depth());
  const int d = logits.depth();
  for (int i = 0; i < logits.height(); ++i) {
    for (int j = 0; j < logits.width(); ++j) {
      const auto l = logits.at(i, j);
      const std::uint64_t position =
          static_cast<std::uint64_t>(i) * logits.width() + j;
      TokenWord word = 0;
      for (int b = 0; b < d; ++b) {
        bool set = false;
        if (sampling.mode == SamplingMode::greedy) {
          set = l[b] >= 0.0;
        } else {
          const double u = counter_uniform(sampling.seed, scale,
                                           position * d + b);
          set = u < sigmoid(l[b]);
        }
        if (set) word |= TokenWord{1} << b;
      }
      out(i, j) = word;
    }
  }
  return out;
}

FeatureMap scale_context(const FeatureMap& cumulative, Extent extent) {
  return bilinear_resample(cumulative, extent);
}

TokenPyramid generate(const PredictorParams& params,
                      const PromptEmbedding& prompt, const Sampling& sampling) {
  const auto& schedule = params.shape.schedule;
  const Extent full = schedule.full();
  FeatureMap cumulative(full.height, full.width, params.shape.depth);
  std::vector<TokenMap> maps;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const FeatureMap context = scale_context(cumulative, schedule[k]);
    maps.push_back(sample_tokens(
        predict_next_scale(params, prompt, context, k), sampling, k));
    cumulative += upsample_tokens(maps.back(), full);
  }
  return TokenPyramid(schedule, std::move(maps));
}

TeacherForcing TeacherForcing::from(const TokenPyramid& pyramid) {
  TeacherForcing out;
  out.schedule = pyramid.schedule();
  out.depth = pyramid.depth();
  const Extent full = out.schedule.full();
  FeatureMap cumulative(full.height, full.width, out.depth);
  for (std::size_t k = 0; k < pyramid.size(); ++k) {
    const TokenMap& tokens = pyramid[k];
    out.contexts.push_back(scale_context(cumulative, tokens.extent()));
    Matrix target(static_cast<Eigen::Index>(tokens.extent().area()),
                  out.depth);
    const auto words = tokens.words();
    for (std::size_t n = 0; n < words.size(); ++n) {
      for (int b = 0; b < out.depth; ++b) {
        target(static_cast<Eigen::Index>(n), b) = (words[n] >> b) & 1u ? 1.0 : 0.0;
      }
    }
    out.targets.push_back(std::move(target));
    cumulative += upsample_tokens(tokens, full);
  }
  return out;
}

Gradients Gradients::zeros_like(const PredictorParams& params,
                                int prompt_rows) {
  Gradients g{PredictorParams::zeros(params.shape),
              Matrix::Zero(prompt_rows, params.shape.width)};
  if (params.adapter) {
    g.params.adapter = LowRankAdapter::zeros(params.shape, params.adapter->rank());
  }
  return g;
}

LossBreakdown sequence_loss(const PredictorParams& params,
                            const Matrix& prompt_rows,
                            const TeacherForcing& forcing,
                            const LossTerms& terms,
                            const GradientRequest& request, Gradients* grads) {
  const auto scales = check_forcing(params, forcing);
  const bool with_kl = terms.kl_weight != 0.0;
  if (with_kl && (terms.reference_logits == nullptr ||
                  terms.reference_logits->size() != scales.size())) {
    throw std::invalid_argument("KL term needs per-scale reference logits");
  }
  if (request.adapter && !params.adapter) {
    throw std::invalid_argument("adapter gradient requested without adapter");
  }
  const bool backward = grads != nullptr && request.any();
  if (backward && request.prompt &&
      (grads->prompt.rows() != prompt_rows.rows() ||
       grads->prompt.cols() != prompt_rows.cols())) {
    throw std::invalid_argument("prompt gradient has the wrong shape");
  }

  const auto [w1e, w2e] = effective_ffn_weights(params);
  const int d = params.shape.depth;
  const double num_scales = static_cast<double>(scales.size());
  FfnGradients ffn{Matrix::Zero(w1e.rows(), w1e.cols()),
                   Matrix::Zero(w2e.rows(), w2e.cols())};
  LossBreakdown out;
  double correct = 0.0;
  double total_bits = 0.0;
  ScaleCache cache;
  Matrix dlogits;

  for (std::size_t k = 0; k < scales.size(); ++k) {
    const FeatureMap& context = forcing.contexts[k];
    check_inputs(params, prompt_rows, context, k);
    forward_scale(params, w1e, w2e, prompt_rows, context, k, cache);
    const Matrix& target = forcing.targets[k];
    const Eigen::Index n = cache.logits.rows();
    const double weight = 1.0 / (num_scales * static_cast<double>(n) * d);
    dlogits.resize(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (int b = 0; b < d; ++b) {
        const double l = cache.logits(r, b);
        const double t = target(r, b);
        const double p = sigmoid(l);
        out.ce += weight * (softplus(l) - t * l);
        correct += ((l >= 0.0) == (t > 0.5)) ? 1.0 : 0.0;
        double dl = weight * (p - t);
        if (with_kl) {
          const double l0 = (*terms.reference_logits)[k](r, b);
          out.kl += weight * (p * (l - l0) - softplus(l) + softplus(l0));
          dl += terms.kl_weight * weight * p * (1.0 - p) * (l - l0);
        }
        dlogits(r, b) = dl;
      }
    }
    total_bits += static_cast<double>(n) * d;
    if (backward) {
      backward_scale(params, w1e, w2e, prompt_rows, context, k, cache, dlogits,
                     request, *grads, ffn);
    }
  }

  if (backward) {
    if (request.base) {
      grads->params.w1 += ffn.w1;
      grads->params.w2 += ffn.w2;
    }
    if (request.adapter) {
      const auto& a = *params.adapter;
      auto& ga = *grads->params.adapter;
      ga.a1.noalias() += ffn.w1 * a.b1.transpose();
      ga.b1.noalias() += a.a1.transpose() * ffn.w1;
      ga.a2.noalias() += ffn.w2 * a.b2.transpose();
      ga.b2.noalias() += a.a2.transpose() * ffn.w2;
    }
  }
  out.total = out.ce + terms.kl_weight * out.kl;
  out.bit_accuracy = total_bits > 0.0 ? correct / total_bits : 0.0;
  return out;
}

std::vector<Matrix> teacher_forced_logits(const PredictorParams& params,
                                          const Matrix& prompt_rows,
                                          const TeacherForcing& forcing) {
  const auto scales = check_forcing(params, forcing);
  const auto [w1e, w2e] = effective_ffn_weights(params);
  std::vector<Matrix> out;
  ScaleCache cache;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    check_inputs(params, prompt_rows, forcing.contexts[k], k);
    forward_scale(params, w1e, w2e, prompt_rows, forcing.contexts[k], k, cache);
    out.push_back(cache.logits);
  }
  return out;
}

TrainingOutcome train_predictor(std::span<const TrainingSample> dataset,
                                const PredictorShape& shape,
                                const TrainingConfig& config) {
  if (dataset.empty()) {
    throw std::invalid_argument("training dataset is empty");
  }
  if (config.iterations < 0) {
    throw std::invalid_argument("iteration count must be non-negative");
  }
  std::vector<TeacherForcing> forcings;
  for (const auto& sample : dataset) {
    if (sample.pyramid.schedule() != shape.schedule ||
        sample.pyramid.depth() != shape.depth) {
      throw std::invalid_argument(
          "training pyramids must share the predictor schedule and depth");
    }
    if (sample.prompt_ids.empty()) {
      throw std::invalid_argument("training sample has no prompt ids");
    }
    forcings.push_back(TeacherForcing::from(sample.pyramid));
  }

  TrainingOutcome outcome{PredictorParams::init(shape, config.seed), {}, 0.0, 0.0};
  PredictorParams& params = outcome.params;
  AdamW optimizer({config.learning_rate, config.beta1, config.beta2, 1e-8,
                   config.weight_decay});
  const double inv_count = 1.0 / static_cast<double>(dataset.size());

  auto evaluate = [&](Gradients* grads) {
    LossBreakdown mean;
    for (std::size_t s = 0; s < dataset.size(); ++s) {
      const auto& ids = dataset[s].prompt_ids;
      const PromptEmbedding prompt = PromptEmbedding::from_ids(params, ids);
      const Matrix rows = prompt.rows();
      if (grads) grads->prompt = Matrix::Zero(rows.rows(), rows.cols());
      const auto loss = sequence_loss(params, rows, forcings[s], {},
                                      {.prompt = true, .base = true}, grads);
      if (grads) {
        for (std::size_t r = 0; r < ids.size(); ++r) {
          grads->params.prompt_table.row(ids[r]) +=
              grads->prompt.row(static_cast<Eigen::Index>(r));
        }
      }
      mean.ce += loss.ce * inv_count;
      mean.bit_accuracy += loss.bit_accuracy * inv_count;
    }
    mean.total = mean.ce;
    return mean;
  };

  for (int it = 0; it < config.iterations; ++it) {
    Gradients grads = Gradients::zeros_like(params, 0);
    const auto loss = evaluate(&grads);
    outcome.loss_trace.push_back(loss.total);
    if (loss.total <= config.target_loss && loss.bit_accuracy == 1.0) break;

    std::vector<std::span<double>> ps;
    std::vector<std::span<const double>> gs;
    for_each_base_tensor(params, [&](std::string_view, auto& t) { ps.push_back(span_of(t)); });
    for_each_base_tensor(grads.params, [&](std::string_view, auto& t) {
      t *= inv_count;
      gs.push_back(span_of(t));
    });
    optimizer.step(ps, gs);
  }
  const auto final_loss = evaluate(nullptr);
  outcome.final_loss = final_loss.total;
  outcome.final_bit_accuracy = final_loss.bit_accuracy;
  return outcome;
}

}  // namespace bitedit
