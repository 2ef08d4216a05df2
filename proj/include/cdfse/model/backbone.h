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

#ifndef CDFSE_MODEL_BACKBONE_H_
#define CDFSE_MODEL_BACKBONE_H_

#include <random>
#include <span>
#include <vector>

#include "cdfse/model/config.h"
#include "cdfse/nn/layers.h"

namespace cdfse::model {

// max(1, round(exp(p) - 1)) for every log-domain prediction p.
std::vector<int> DurationsFromLog(const nn::Matrix& log_durations);
// log(d + 1) targets as a column.
nn::Matrix LogDurationTargets(std::span<const int> durations);
// Row i of every sequence repeated durations[i] times. Throws InvalidInput for
// a non-positive duration or a length mismatch.
std::vector<int> ExpandIndex(std::span<const int> durations);

// Phoneme encoder, speaker conditioning, duration predictor, length
// regulator and mel decoder.
class Backbone {
 public:
  Backbone(nn::ParamStore& store, const ModelConfig& config, std::mt19937_64& rng);

  // Embedding lookup, sinusoidal positions and the encoder FFT blocks.
  // Throws InvalidInput for ids outside the vocabulary.
  nn::Var PhonemeEncode(nn::Context& ctx, std::span<const int> ids,
                        std::span<const int> lengths) const;

  // cdfse: enc + bridge(speaker), one speaker row per phoneme.
  // cls: enc + bridge(speaker[b]) at every position of sequence b.
  // The bridge is the identity when out_dim equals hidden.
  nn::Var Condition(nn::Context& ctx, nn::Var encoded, std::span<const int> lengths,
                    ConditioningMode mode, nn::Var speaker) const;

  // Log-domain durations, sum(L) x 1.
  nn::Var PredictDurations(nn::Context& ctx, nn::Var conditioned,
                           std::span<const int> lengths) const;

  // Returns sum(durations) rows; `frame_lengths` receives per-sequence totals.
  nn::Var LengthRegulate(nn::Var conditioned, std::span<const int> lengths,
                         std::span<const int> durations, nn::Lengths* frame_lengths) const;

  nn::Var DecodeMel(nn::Context& ctx, nn::Var upsampled,
                    std::span<const int> frame_lengths) const;

 private:
  ModelConfig config_;
  nn::Parameter* embedding_ = nullptr;
  std::vector<nn::FftBlock> encoder_;
  bool has_bridge_ = false;
  nn::LinearLayer bridge_;
  nn::Conv1dLayer duration_conv_[2];
  nn::LayerNormLayer duration_norm_[2];
  nn::LinearLayer duration_head_;
  std::vector<nn::FftBlock> decoder_;
  nn::LinearLayer mel_head_;
};

}  // namespace cdfse::model

#endif  // CDFSE_MODEL_BACKBONE_H_
