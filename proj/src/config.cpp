// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bitedit/io.hpp"

namespace bitedit {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config key '" + key + "': bad number '" +
                                value + "'");
  }
  return out;
}

}  // namespace

ScaleSchedule RunConfig::schedule_for(Extent image) const {
  if (image.height % codec.patch != 0 || image.width % codec.patch != 0) {
    throw std::invalid_argument("image " + to_string(image) +
                                " is not divisible by patch " +
                                std::to_string(codec.patch));
  }
  const Extent tokens{image.height / codec.patch, image.width / codec.patch};
  if (!schedule) return ScaleSchedule::ramp(tokens);
  if (schedule->full() != tokens) {
    throw std::invalid_argument("schedule ends at " + to_string(schedule->full()) +
                                " but the token grid is " + to_string(tokens));
  }
  return *schedule;
}

PredictorShape RunConfig::predictor_shape(Extent image) const {
  PredictorShape shape{width, codec.depth(), vocab, schedule_for(image)};
  shape.validate();
  return shape;
}

RunConfig RunConfig::parse(std::istream& in) {
  std::map<std::string, std::string> entries;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(number) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(number) +
                                  ": empty key or value");
    }
    if (!entries.emplace(key, value).second) {
      throw std::invalid_argument("config key '" + key + "' given twice");
    }
  }

  RunConfig c;
  // The preset is applied first so that explicit optimizer keys override it.
  if (auto it = entries.find("preset"); it != entries.end()) {
    c.preset = it->second;
    c.inversion = InversionConfig::preset(c.preset);
  }
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto as_int = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = parse_number<int>(k, v);
    };
  };
  auto as_double = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = parse_number<double>(k, v);
    };
  };
  InversionConfig& inv = c.inversion;
  const std::map<std::string, Setter> setters{
      {"schedule", [&](auto&, auto& v) { c.schedule = ScaleSchedule::parse(v); }},
      {"patch", as_int(c.codec.patch)},
      {"gain", as_double(c.codec.gain)},
      {"width", as_int(c.width)},
      {"vocab", as_int(c.vocab)},
      {"instruction_id",
       [&](auto& k, auto& v) { c.instruction_id = parse_number<int>(k, v); }},
      {"kernel", [&](auto&, auto& v) { c.kernel.kind = parse_kernel_kind(v); }},
      {"tau1", as_double(c.kernel.tau1)},
      {"tau2", as_double(c.kernel.tau2)},
      {"alpha", as_double(c.kernel.alpha)},
      {"mode", [&](auto&, auto& v) { c.mode = parse_edit_mode(v); }},
      {"sampling", [&](auto&, auto& v) { c.sampling = parse_sampling_mode(v); }},
      {"preset", [](auto&, auto&) {}},
      {"stage1_iterations", as_int(inv.stage1_iterations)},
      {"stage2_iterations", as_int(inv.stage2_iterations)},
      {"learning_rate", as_double(inv.learning_rate)},
      {"beta1", as_double(inv.beta1)},
      {"beta2", as_double(inv.beta2)},
      {"weight_decay", as_double(inv.weight_decay)},
      {"lora_rank", as_int(inv.lora_rank)},
      {"kl_weight", as_double(inv.kl_weight)},
      {"learnable_tokens", as_int(inv.learnable_tokens)},
      {"prompt_init_noise", as_double(inv.prompt_init_noise)},
      {"train_iterations", as_int(c.training.iterations)},
      {"train_learning_rate", as_double(c.training.learning_rate)},
      {"train_target_loss", as_double(c.training.target_loss)},
      {"train_samples", as_int(c.train_samples)},
      {"predictor", [&](auto&, auto& v) { c.predictor = v; }},
  };
  for (const auto& [key, value] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
    it->second(key, value);
  }
  if (c.codec.patch <= 0 || !(c.codec.gain > 0.0)) {
    throw std::invalid_argument("patch and gain must be positive");
  }
  if (c.codec.depth() > kMaxTokenDepth) {
    throw std::invalid_argument("patch^2 exceeds 64 token bits");
  }
  if (c.instruction_id && (*c.instruction_id < 0 || *c.instruction_id >= c.vocab)) {
    throw std::invalid_argument("instruction_id outside the vocabulary");
  }
  if (c.train_samples <= 0) {
    throw std::invalid_argument("train_samples must be positive");
  }
  c.inversion.validate();
  return c;
}

RunConfig RunConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse(in);
}

}  // namespace bitedit
