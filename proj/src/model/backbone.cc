// Copyright 2026 The CDFSE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdfse/model/backbone.h"

#include <cmath>
#include <string>

#include "cdfse/common/errors.h"
#include "cdfse/nn/ops.h"

namespace cdfse::model {

using nn::Context;
using nn::Var;

std::vector<int> DurationsFromLog(const nn::Matrix& log_durations) {
  std::vector<int> out(log_durations.rows());
  for (Eigen::Index i = 0; i < log_durations.rows(); ++i) {
    const double d = std::round(std::exp(log_durations(i, 0)) - 1.0);
    out[i] = d < 1.0 ? 1 : static_cast<int>(std::min(d, 1e6));
  }
  return out;
}

nn::Matrix LogDurationTargets(std::span<const int> durations) {
  nn::Matrix out(durations.size(), 1);
  for (size_t i = 0; i < durations.size(); ++i) out(i, 0) = std::log(durations[i] + 1.0);
  return out;
}

std::vector<int> ExpandIndex(std::span<const int> durations) {
  std::vector<int> index;
  for (size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] < 1) {
      throw InvalidInput("length regulator: duration " + std::to_string(durations[i]) +
                         " at position " + std::to_string(i) + " is not positive");
    }
    index.insert(index.end(), durations[i], static_cast<int>(i));
  }
  return index;
}

Backbone::Backbone(nn::ParamStore& store, const ModelConfig& config, std::mt19937_64& rng)
    : config_(config) {
  config.Validate();
  const int h = config.backbone.hidden;
  embedding_ = &store.Add("backbone.embedding", {config.n_phonemes, h});
  nn::InitNormal(*embedding_, 1.0, rng);
  for (int i = 0; i < config.backbone.encoder_blocks; ++i) {
    encoder_.emplace_back(store, "backbone.encoder.block" + std::to_string(i),
                          config.FftConfig(h), rng);
  }
  has_bridge_ = config.ref.out_dim != h;
  if (has_bridge_) {
    bridge_ = nn::LinearLayer(store, "backbone.bridge", config.ref.out_dim, h, rng, false);
  }
  int channels = h;
  for (int i = 0; i < 2; ++i) {
    const std::string name = "backbone.duration.conv" + std::to_string(i);
    duration_conv_[i] = nn::Conv1dLayer(store, name, channels, config.backbone.duration_filter,
                                        config.backbone.duration_kernel, rng);
    duration_norm_[i] =
        nn::LayerNormLayer(store, name + ".norm", config.backbone.duration_filter);
    channels = config.backbone.duration_filter;
  }
  duration_head_ = nn::LinearLayer(store, "backbone.duration.head", channels, 1, rng);
  for (int i = 0; i < config.backbone.decoder_blocks; ++i) {
    decoder_.emplace_back(store, "backbone.decoder.block" + std::to_string(i),
                          config.FftConfig(h), rng);
  }
  mel_head_ = nn::LinearLayer(store, "backbone.mel_head", h, config.n_mels, rng);
}

Var Backbone::PhonemeEncode(Context& ctx, std::span<const int> ids,
                            std::span<const int> lengths) const {
  if (nn::TotalLength(lengths) != static_cast<int>(ids.size())) {
    throw InvalidInput("phoneme lengths do not add up to the id count");
  }
  for (int l : lengths) {
    if (l < 1) throw InvalidInput("phoneme sequence must not be empty");
  }
  for (int id : ids) {
    if (id < 0 || id >= config_.n_phonemes) {
      throw InvalidInput("phoneme id " + std::to_string(id) + " outside vocabulary of " +
                         std::to_string(config_.n_phonemes));
    }
  }
  Var x = nn::GatherRows(ctx.graph.Param(*embedding_), std::vector<int>(ids.begin(), ids.end()));
  x = nn::AddConstant(x, nn::SinusoidalPositions(lengths, config_.backbone.hidden));
  for (const nn::FftBlock& block : encoder_) x = block(ctx, x, lengths);
  return x;
}

Var Backbone::Condition(Context& ctx, Var encoded, std::span<const int> lengths,
                        ConditioningMode mode, Var speaker) const {
  if (speaker.cols() != config_.ref.out_dim) {
    throw InvalidInput("conditioning: speaker width " + std::to_string(speaker.cols()) +
                       " differs from " + std::to_string(config_.ref.out_dim));
  }
  if (mode == ConditioningMode::kCls) {
    if (speaker.rows() != static_cast<Eigen::Index>(lengths.size())) {
      throw InvalidInput("cls conditioning needs one utterance vector per sequence");
    }
    std::vector<int> index;
    index.reserve(encoded.rows());
    for (size_t b = 0; b < lengths.size(); ++b) {
      index.insert(index.end(), lengths[b], static_cast<int>(b));
    }
    speaker = nn::GatherRows(speaker, std::move(index));
  } else if (speaker.rows() != encoded.rows()) {
    throw InvalidInput("cdfse conditioning: " + std::to_string(speaker.rows()) +
                       " embedding rows for " + std::to_string(encoded.rows()) +
                       " phonemes");
  }
  if (has_bridge_) speaker = bridge_(ctx, speaker);
  return nn::Add(encoded, speaker);
}

Var Backbone::PredictDurations(Context& ctx, Var conditioned,
                               std::span<const int> lengths) const {
  Var x = conditioned;
  for (int i = 0; i < 2; ++i) {
    x = duration_norm_[i](ctx, nn::Relu(duration_conv_[i](ctx, x, lengths)));
  }
  return duration_head_(ctx, x);
}

Var Backbone::LengthRegulate(Var conditioned, std::span<const int> lengths,
                             std::span<const int> durations,
                             nn::Lengths* frame_lengths) const {
  if (durations.size() != static_cast<size_t>(conditioned.rows()) ||
      nn::TotalLength(lengths) != conditioned.rows()) {
    throw InvalidInput("length regulator: " + std::to_string(durations.size()) +
                       " durations for " + std::to_string(conditioned.rows()) + " phonemes");
  }
  std::vector<int> index = ExpandIndex(durations);
  if (frame_lengths != nullptr) {
    frame_lengths->clear();
    size_t pos = 0;
    for (int l : lengths) {
      int total = 0;
      for (int i = 0; i < l; ++i) total += durations[pos++];
      frame_lengths->push_back(total);
    }
  }
  return nn::GatherRows(conditioned, std::move(index));
}

Var Backbone::DecodeMel(Context& ctx, Var upsampled,
                        std::span<const int> frame_lengths) const {
  Var x = nn::AddConstant(upsampled,
                          nn::SinusoidalPositions(frame_lengths, config_.backbone.hidden));
  for (const nn::FftBlock& block : decoder_) x = block(ctx, x, frame_lengths);
  return mel_head_(ctx, x);
}

}  // namespace cdfse::model
