// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace bitedit {

void AdamWConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(weight_decay >= 0.0)) {
    throw std::invalid_argument("weight decay must be non-negative");
  }
}

AdamW::AdamW(AdamWConfig config) : config_(config) { config_.validate(); }

void AdamW::step(std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("parameter and gradient lists differ in size");
  }
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.emplace_back(p.size(), 0.0);
      second_.emplace_back(p.size(), 0.0);
    }
  }
  if (first_.size() != params.size()) {
    throw std::invalid_argument("parameter list changed between steps");
  }

  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  const double decay = 1.0 - lr * config_.weight_decay;

  for (std::size_t t = 0; t < params.size(); ++t) {
    auto p = params[t];
    auto g = grads[t];
    auto& m = first_[t];
    auto& v = second_[t];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw std::invalid_argument("parameter tensor changed size");
    }
    for (std::size_t n = 0; n < p.size(); ++n) {
      m[n] = b1 * m[n] + (1.0 - b1) * g[n];
      v[n] = b2 * v[n] + (1.0 - b2) * g[n] * g[n];
      const double m_hat = m[n] / correction1;
      const double v_hat = v[n] / correction2;
      p[n] = p[n] * decay - lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace bitedit
