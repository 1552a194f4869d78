// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "bitedit/optim.hpp"
#include "bitedit/rng.hpp"

namespace bitedit {

InversionConfig InversionConfig::toy() { return {}; }

InversionConfig InversionConfig::paper() {
  InversionConfig c;
  c.learning_rate = 4.6875e-5;
  return c;
}

InversionConfig InversionConfig::preset(const std::string& name) {
  if (name == "toy") return toy();
  if (name == "paper") return paper();
  throw std::invalid_argument("unknown optimizer preset '" + name +
                              "' (expected toy or paper)");
}

void InversionConfig::validate() const {
  if (stage1_iterations < 0 || stage2_iterations < 0) {
    throw std::invalid_argument("iteration counts must be non-negative");
  }
  AdamWConfig{learning_rate, beta1, beta2, 1e-8, weight_decay}.validate();
  if (lora_rank <= 0) throw std::invalid_argument("LoRA rank must be positive");
  if (!(kl_weight >= 0.0)) {
    throw std::invalid_argument("KL weight must be non-negative");
  }
  if (learnable_tokens <= 0) {
    throw std::invalid_argument("need at least one learnable prompt token");
  }
  if (!(prompt_init_noise >= 0.0)) {
    throw std::invalid_argument("prompt init noise must be non-negative");
  }
}

Adaptation InversionResult::adaptation() const {
  return {prompt_stage.learnable, adapter_stage.adapter};
}

std::vector<InversionRecord> InversionResult::records() const {
  std::vector<InversionRecord> out;
  out.push_back(prompt_stage.initial);
  out.insert(out.end(), prompt_stage.trace.begin(), prompt_stage.trace.end());
  out.push_back(adapter_stage.initial);
  out.insert(out.end(), adapter_stage.trace.begin(), adapter_stage.trace.end());
  return out;
}

double inversion_loss(const PredictorParams& params,
                      const PromptEmbedding& prompt,
                      const TokenPyramid& pyramid) {
  return sequence_loss(params, prompt.rows(), TeacherForcing::from(pyramid)).ce;
}

PromptEmbedding initial_prompt(const PredictorParams& params,
                               std::span<const int> ids,
                               const InversionConfig& config) {
  config.validate();
  if (ids.empty()) throw std::invalid_argument("prompt needs at least one id");
  PromptEmbedding base = PromptEmbedding::from_ids(params, ids);
  std::mt19937_64 rng(splitmix64(config.seed ^ 0x7072306D7074ull));
  std::normal_distribution<double> noise(0.0, config.prompt_init_noise);
  Matrix learnable(config.learnable_tokens, params.shape.width);
  for (Eigen::Index r = 0; r < learnable.rows(); ++r) {
    for (Eigen::Index c = 0; c < learnable.cols(); ++c) {
      learnable(r, c) = base.fixed()(0, c) +
                        (config.prompt_init_noise > 0.0 ? noise(rng) : 0.0);
    }
  }
  base.set_learnable(std::move(learnable));
  return base;
}

PromptStageResult optimize_prompt(const PredictorParams& params,
                                  const PromptEmbedding& init,
                                  const TokenPyramid& source,
                                  const InversionConfig& config) {
  config.validate();
  if (init.learnable_count() < 1) {
    throw std::invalid_argument("prompt has no learnable rows to optimize");
  }
  const TeacherForcing forcing = TeacherForcing::from(source);
  AdamW optimizer({config.learning_rate, config.beta1, config.beta2, 1e-8,
                   config.weight_decay});
  PromptStageResult out{init.learnable(), {}, {}};
  Matrix rows = init.rows();

  for (int it = 0; it <= config.stage1_iterations; ++it) {
    const bool update = it < config.stage1_iterations;
    Gradients grads{PredictorParams{}, Matrix::Zero(rows.rows(), rows.cols())};
    const auto loss = sequence_loss(params, rows, forcing, {},
                                    {.prompt = true}, update ? &grads : nullptr);
    const InversionRecord record{it, 1, loss.ce, 0.0, loss.bit_accuracy};
    if (it == 0) {
      out.initial = record;
    } else {
      out.trace.push_back(record);
    }
    if (!update) break;
    Matrix grad = grads.prompt.bottomRows(out.learnable.rows());
    const std::span<double> p{out.learnable.data(),
                              static_cast<std::size_t>(out.learnable.size())};
    const std::span<const double> g{grad.data(),
                                    static_cast<std::size_t>(grad.size())};
    optimizer.step(std::span(&p, 1), std::span(&g, 1));
    rows.bottomRows(out.learnable.rows()) = out.learnable;
  }
  return out;
}

PredictorParams with_adapter(PredictorParams params,
                             std::optional<LowRankAdapter> adapter) {
  if (adapter) {
    const int m = params.shape.width;
    const int hidden = params.shape.hidden();
    const int r = adapter->rank();
    if (adapter->a1.rows() != m || adapter->b1.rows() != r ||
        adapter->b1.cols() != hidden || adapter->a2.rows() != hidden ||
        adapter->a2.cols() != r || adapter->b2.rows() != r ||
        adapter->b2.cols() != m) {
      throw std::invalid_argument("adapter shapes do not match the predictor");
    }
  }
  params.adapter = std::move(adapter);
  return params;
}

AdapterStageResult optimize_lora(const PredictorParams& params,
                                 const PromptEmbedding& prompt,
                                 const TokenPyramid& source,
                                 const InversionConfig& config) {
  config.validate();
  const TeacherForcing forcing = TeacherForcing::from(source);
  const Matrix rows = prompt.rows();
  PredictorParams base = with_adapter(params, std::nullopt);
  const std::vector<Matrix> reference =
      teacher_forced_logits(base, rows, forcing);
  PredictorParams adapted = with_adapter(
      std::move(base),
      LowRankAdapter::init(params.shape, config.lora_rank, config.seed));
  AdamW optimizer({config.learning_rate, config.beta1, config.beta2, 1e-8,
                   config.weight_decay});
  const LossTerms terms{config.kl_weight, &reference};
  AdapterStageResult out;

  for (int it = 0; it <= config.stage2_iterations; ++it) {
    const bool update = it < config.stage2_iterations;
    Gradients grads = Gradients::zeros_like(adapted, 0);
    const auto loss = sequence_loss(adapted, rows, forcing, terms,
                                    {.adapter = true}, update ? &grads : nullptr);
    const InversionRecord record{it, 2, loss.ce, loss.kl, loss.bit_accuracy};
    if (it == 0) {
      out.initial = record;
    } else {
      out.trace.push_back(record);
    }
    if (!update) break;
    std::vector<std::span<double>> ps;
    std::vector<std::span<const double>> gs;
    for_each_adapter_tensor(*adapted.adapter, [&](std::string_view, Matrix& t) {
      ps.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
    });
    for_each_adapter_tensor(*grads.params.adapter,
                            [&](std::string_view, const Matrix& t) {
                              gs.emplace_back(t.data(),
                                              static_cast<std::size_t>(t.size()));
                            });
    optimizer.step(ps, gs);
  }
  out.adapter = *adapted.adapter;
  return out;
}

InversionResult invert(const PredictorParams& params, std::span<const int> ids,
                       const TokenPyramid& source,
                       const InversionConfig& config) {
  const PredictorParams base = with_adapter(params, std::nullopt);
  PromptEmbedding prompt = initial_prompt(base, ids, config);
  InversionResult result;
  result.prompt_stage = optimize_prompt(base, prompt, source, config);
  prompt.set_learnable(result.prompt_stage.learnable);
  result.adapter_stage = optimize_lora(base, prompt, source, config);
  const PredictorParams adapted =
      with_adapter(base, result.adapter_stage.adapter);
  result.bit_accuracy =
      sequence_loss(adapted, prompt.rows(), TeacherForcing::from(source))
          .bit_accuracy;
  return result;
}

namespace {

struct Probe {
  std::string name;
  double* value;
  double analytic;
};

void add_probes(std::vector<Probe>& probes, std::string_view name,
                double* value, const double* grad, std::size_t count,
                std::size_t first = 0) {
  for (std::size_t n = first; n < count; ++n) {
    probes.push_back(
        {std::string(name) + "[" + std::to_string(n) + "]", value + n, grad[n]});
  }
}

}  // namespace

GradientCheckReport check_gradients(const PredictorParams& params,
                                    const PromptEmbedding& prompt,
                                    const TokenPyramid& source,
                                    const GradientCheckOptions& options) {
  const TeacherForcing forcing = TeacherForcing::from(source);
  PredictorParams work = params;
  Matrix rows = prompt.rows();
  const std::vector<Matrix> reference =
      teacher_forced_logits(with_adapter(params, std::nullopt), rows, forcing);
  const LossTerms terms{options.kl_weight, &reference};
  const GradientRequest request{options.prompt || options.base,
                                options.base,
                                options.adapter && params.adapter.has_value()};

  Gradients grads = Gradients::zeros_like(work, static_cast<int>(rows.rows()));
  sequence_loss(work, rows, forcing, terms, request, &grads);

  std::vector<Probe> probes;
  const auto prompt_size = static_cast<std::size_t>(rows.size());
  if (options.base) {
    add_probes(probes, "prompt", rows.data(), grads.prompt.data(), prompt_size);
    std::vector<const double*> base_grads;
    for_each_base_tensor(grads.params, [&](std::string_view, const auto& t) {
      base_grads.push_back(t.data());
    });
    std::size_t index = 0;
    for_each_base_tensor(work, [&](std::string_view name, auto& t) {
      const double* g = base_grads[index++];
      // The lookup table only reaches the loss through the prompt rows.
      if (name == "prompt_table") return;
      add_probes(probes, name, t.data(), g, static_cast<std::size_t>(t.size()));
    });
  } else if (options.prompt) {
    add_probes(probes, "learnable", rows.data(), grads.prompt.data(),
               prompt_size,
               static_cast<std::size_t>(prompt.fixed_count()) * rows.cols());
  }
  if (request.adapter) {
    std::vector<const double*> adapter_grads;
    for_each_adapter_tensor(*grads.params.adapter,
                            [&](std::string_view, const Matrix& t) {
                              adapter_grads.push_back(t.data());
                            });
    std::size_t index = 0;
    for_each_adapter_tensor(*work.adapter, [&](std::string_view name, Matrix& t) {
      add_probes(probes, name, t.data(), adapter_grads[index++],
                 static_cast<std::size_t>(t.size()));
    });
  }

  auto objective = [&] {
    return sequence_loss(work, rows, forcing, terms).total;
  };
  GradientCheckReport report;
  for (const Probe& probe : probes) {
    const double saved = *probe.value;
    *probe.value = saved + options.step;
    const double up = objective();
    *probe.value = saved - options.step;
    const double down = objective();
    *probe.value = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double denom = std::max(
        {std::abs(probe.analytic), std::abs(numeric), options.floor});
    const double err = std::abs(probe.analytic - numeric) / denom;
    if (report.worst.empty() || err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst = probe.name;
    }
    ++report.checked;
  }
  report.passed = report.checked > 0 &&
                  report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace bitedit
