// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bitedit {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

// Adam with decoupled weight decay. Parameter tensors are identified by their
// position in the list passed to step(); the list must not change shape
// between calls.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config);

  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads);

  long steps() const { return steps_; }
  const AdamWConfig& config() const { return config_; }

 private:
  AdamWConfig config_;
  long steps_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace bitedit
