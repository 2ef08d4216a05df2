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

#include "cdfse/model/reference_attention.h"

#include <cmath>
#include <string>

#include "cdfse/common/errors.h"
#include "cdfse/nn/ops.h"

namespace cdfse::model {

ReferenceAttention::ReferenceAttention(nn::ParamStore& store, const ModelConfig& config,
                                       std::mt19937_64& rng)
    : query_(store, "attn.query", config.backbone.hidden, config.attention_dim, rng, false),
      key_(store, "attn.key", config.ref.out_dim, config.attention_dim, rng, false),
      scale_(1.0 / (config.attention_temperature * std::sqrt(config.attention_dim))) {}

FineGrainedEmbedding ReferenceAttention::operator()(
    nn::Context& ctx, nn::Var phoneme_encoding, std::span<const int> phoneme_lengths,
    nn::Var local_content, nn::Var local_speaker,
    std::span<const int> local_lengths) const {
  if (local_content.rows() != local_speaker.rows()) {
    throw InvalidInput("reference attention: " + std::to_string(local_content.rows()) +
                       " content rows but " + std::to_string(local_speaker.rows()) +
                       " speaker rows");
  }
  for (int s : local_lengths) {
    if (s < 1) throw InvalidInput("reference attention: no local embeddings (S=0)");
  }
  nn::Var q = query_(ctx, phoneme_encoding);
  nn::Var k = key_(ctx, local_content);
  nn::AttentionOutput att =
      nn::BlockAttention(q, k, local_speaker, phoneme_lengths, local_lengths, scale_);
  return {att.out, std::move(att.weights)};
}

}  // namespace cdfse::model
