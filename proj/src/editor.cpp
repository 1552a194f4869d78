// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bitedit/editor.hpp"

#include <stdexcept>
#include <string>

namespace bitedit {

EditMode parse_edit_mode(std::string_view name) {
  if (name == "ar") return EditMode::autoregressive;
  if (name == "nar") return EditMode::non_autoregressive;
  throw std::invalid_argument("unknown edit mode '" + std::string(name) +
                              "' (expected ar or nar)");
}

std::string_view to_string(EditMode mode) {
  return mode == EditMode::autoregressive ? "ar" : "nar";
}

void EditSession::validate() const {
  if (!params) throw std::invalid_argument("edit session has no predictor");
  const auto& schedule = params->shape.schedule;
  if (source.schedule() != schedule) {
    throw std::invalid_argument("source pyramid schedule " +
                                source.schedule().str() +
                                " does not match predictor schedule " +
                                schedule.str());
  }
  if (source.depth() != params->shape.depth) {
    throw std::invalid_argument("source pyramid depth does not match predictor");
  }
  if (kernel.extent() != schedule.full()) {
    throw std::invalid_argument("kernel " + to_string(kernel.extent()) +
                                " does not match token grid " +
                                to_string(schedule.full()));
  }
  if (prompt.size() == 0 || prompt.width() != params->shape.width) {
    throw std::invalid_argument("edit prompt is empty or has the wrong width");
  }
  if (codec.depth() != params->shape.depth) {
    throw std::invalid_argument("codec patch does not match token depth");
  }
}

bool EditSession::operator==(const EditSession& other) const {
  const bool same_params =
      params == other.params ||
      (params && other.params && *params == *other.params);
  return same_params && prompt == other.prompt && source == other.source &&
         kernel == other.kernel && mode == other.mode &&
         sampling.mode == other.sampling.mode &&
         sampling.seed == other.sampling.seed &&
         codec.patch == other.codec.patch && codec.gain == other.codec.gain;
}

namespace {

EditResult finish(const EditSession& session, std::vector<FeatureMap> edited,
                  std::vector<TokenMap> target, FeatureMap features) {
  EditResult out;
  out.edited = std::move(edited);
  out.target = TokenPyramid(session.params->shape.schedule, std::move(target));
  out.image = decode_image(features, session.codec);
  out.features = std::move(features);
  return out;
}

}  // namespace

EditResult edit(const EditSession& session) {
  session.validate();
  const auto& params = *session.params;
  const auto& schedule = params.shape.schedule;
  const Extent full = schedule.full();
  FeatureMap cumulative(full.height, full.width, params.shape.depth);
  std::vector<FeatureMap> edited;
  std::vector<TokenMap> target;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const FeatureMap context = scale_context(cumulative, schedule[k]);
    target.push_back(sample_tokens(
        predict_next_scale(params, session.prompt, context, k),
        session.sampling, k));
    edited.push_back(weighted_blend(upsample_tokens(target.back(), full),
                                    upsample_tokens(session.source[k], full),
                                    session.kernel));
    cumulative += edited.back();
  }
  return finish(session, std::move(edited), std::move(target),
                std::move(cumulative));
}

EditResult edit_nar(const EditSession& session) {
  session.validate();
  const auto& params = *session.params;
  const Extent full = params.shape.schedule.full();
  const TokenPyramid generated =
      generate(params, session.prompt, session.sampling);
  FeatureMap cumulative(full.height, full.width, params.shape.depth);
  std::vector<FeatureMap> edited;
  for (std::size_t k = 0; k < generated.size(); ++k) {
    edited.push_back(weighted_blend(upsample_tokens(generated[k], full),
                                    upsample_tokens(session.source[k], full),
                                    session.kernel));
    cumulative += edited.back();
  }
  return finish(session, std::move(edited),
                {generated.maps().begin(), generated.maps().end()},
                std::move(cumulative));
}

EditResult run_edit(const EditSession& session) {
  return session.mode == EditMode::autoregressive ? edit(session)
                                                  : edit_nar(session);
}

EditSession make_session(const PredictorParams& params,
                         const EditRequest& request,
                         const Adaptation& adaptation) {
  const auto& schedule = params.shape.schedule;
  if (request.codec.depth() != params.shape.depth) {
    throw std::invalid_argument("codec patch " +
                                std::to_string(request.codec.patch) +
                                " does not match token depth " +
                                std::to_string(params.shape.depth));
  }
  if (request.pixel_mask.extent() != request.source.extent()) {
    throw std::invalid_argument("mask " + to_string(request.pixel_mask.extent()) +
                                " does not match image " +
                                to_string(request.source.extent()));
  }
  const FeatureMap features = encode_image(request.source, request.codec);
  if (features.extent() != schedule.full()) {
    throw std::invalid_argument("image token grid " +
                                to_string(features.extent()) +
                                " does not match predictor schedule " +
                                schedule.str());
  }
  const EditMask token_mask = mask_to_token_grid(
      request.pixel_mask, schedule.full(), request.codec.patch);

  EditSession session;
  session.kernel = build_kernel(token_mask, request.kernel);
  session.source = tokenize(features, schedule).pyramid;
  session.params = std::make_shared<const PredictorParams>(
      with_adapter(params, adaptation.adapter));
  session.prompt = PromptEmbedding::from_ids(params, request.prompt_ids,
                                             adaptation.learnable);
  session.mode = request.mode;
  session.sampling = request.sampling;
  session.codec = request.codec;
  session.validate();
  return session;
}

}  // namespace bitedit
