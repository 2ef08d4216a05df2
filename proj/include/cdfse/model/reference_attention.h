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

#ifndef CDFSE_MODEL_REFERENCE_ATTENTION_H_
#define CDFSE_MODEL_REFERENCE_ATTENTION_H_

#include <random>
#include <span>
#include <vector>

#include "cdfse/model/config.h"
#include "cdfse/nn/layers.h"

namespace cdfse::model {

struct FineGrainedEmbedding {
  nn::Var rows;                     // sum(L) x out_dim
  std::vector<nn::Matrix> weights;  // one L x S matrix per sequence
};

// Queries are projected phoneme encodings, keys projected local content
// embeddings, values the local speaker embeddings as they are. Single head,
// no positional terms on the key side.
class ReferenceAttention {
 public:
  ReferenceAttention() = default;
  ReferenceAttention(nn::ParamStore& store, const ModelConfig& config, std::mt19937_64& rng);

  // Throws InvalidInput when a sequence has no local embeddings or the
  // content and speaker rows disagree.
  FineGrainedEmbedding operator()(nn::Context& ctx, nn::Var phoneme_encoding,
                                  std::span<const int> phoneme_lengths,
                                  nn::Var local_content, nn::Var local_speaker,
                                  std::span<const int> local_lengths) const;

 private:
  nn::LinearLayer query_;
  nn::LinearLayer key_;
  double scale_ = 1.0;
};

}  // namespace cdfse::model

#endif  // CDFSE_MODEL_REFERENCE_ATTENTION_H_
