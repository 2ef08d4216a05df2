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

#ifndef CDFSE_MODEL_MODEL_H_
#define CDFSE_MODEL_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cdfse/model/backbone.h"
#include "cdfse/model/config.h"
#include "cdfse/model/reference_attention.h"
#include "cdfse/model/reference_encoder.h"
#include "cdfse/nn/tensor.h"

namespace cdfse::model {

struct ModelOutput {
  ReferenceEncoding ref;
  nn::Var encoded;      // sum(L) x hidden
  nn::Var speaker;      // cdfse: sum(L) x out_dim; cls: B x out_dim
  nn::Var conditioned;  // sum(L) x hidden
  nn::Var log_durations;
  nn::Var mel;  // sum(T) x n_mels
  std::vector<nn::Matrix> attention;  // cdfse only
  nn::Lengths phoneme_lengths;
  nn::Lengths frame_lengths;
  std::vector<int> durations;  // the ones used for length regulation
};

struct SynthesisResult {
  nn::Matrix mel;
  nn::Matrix attention;  // L x S, empty in cls mode
  std::vector<int> durations;
};

class CdfseModel {
 public:
  // Parameters are initialized from `init_seed`.
  CdfseModel(const ModelConfig& config, uint64_t init_seed);
  CdfseModel(const CdfseModel&) = delete;
  CdfseModel& operator=(const CdfseModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ConditioningMode mode() const { return config_.backbone.mode; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const ReferenceEncoder& reference_encoder() const { return ref_encoder_; }
  const Backbone& backbone() const { return backbone_; }
  const ReferenceAttention* attention() const {
    return attention_ ? &*attention_ : nullptr;
  }

  ReferenceEncoding EncodeReference(nn::Context& ctx, const nn::Matrix& mel,
                                    std::span<const int> lengths) const;

  // Text branch on top of an encoded reference. With empty `durations` the
  // predicted ones drive the length regulator.
  ModelOutput Generate(nn::Context& ctx, ReferenceEncoding ref, std::span<const int> ids,
                       std::span<const int> phoneme_lengths,
                       std::span<const int> durations = {}) const;

  ModelOutput Forward(nn::Context& ctx, const nn::Matrix& mel,
                      std::span<const int> mel_lengths, std::span<const int> ids,
                      std::span<const int> phoneme_lengths,
                      std::span<const int> durations = {}) const;

  // Inference on a single utterance, no gradients, batch norm in eval mode.
  SynthesisResult Synthesize(std::span<const int> ids, const nn::Matrix& reference_mel) const;

 private:
  ModelConfig config_;
  nn::ParamStore store_;
  ReferenceEncoder ref_encoder_;
  std::optional<ReferenceAttention> attention_;
  Backbone backbone_;
};

// Trainable scalar count implied by the configuration, computed from layer
// shapes alone.
int64_t AnalyticParameterCount(const ModelConfig& config);

}  // namespace cdfse::model

#endif  // CDFSE_MODEL_MODEL_H_
