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

#ifndef CDFSE_MODEL_REFERENCE_ENCODER_H_
#define CDFSE_MODEL_REFERENCE_ENCODER_H_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "cdfse/model/config.h"
#include "cdfse/nn/layers.h"

namespace cdfse::model {

// ceil(length / 2^pool_stages) for every sequence.
nn::Lengths DownsampledLengths(std::span<const int> lengths, int pool_stages);

// Four conv layers (ReLU, batch norm, optional 2x average pooling) and a tanh
// output layer. Pools follow the first min(pool_stages, 4) conv layers; any
// further pools act on the last conv feature map.
class DownsampleEncoder {
 public:
  DownsampleEncoder() = default;
  DownsampleEncoder(nn::ParamStore& store, const std::string& name, int in_dim,
                    const RefEncoderConfig& config, std::mt19937_64& rng);

  // Returns sum(S) x out_dim; `out_lengths` receives S per sequence.
  nn::Var operator()(nn::Context& ctx, nn::Var x, std::span<const int> lengths,
                     nn::Lengths* out_lengths) const;

 private:
  int pool_stages_ = 0;
  std::vector<nn::Conv1dLayer> convs_;
  std::vector<nn::BatchNormLayer> norms_;
  nn::LinearLayer output_;
};

// Everything the reference branch produces for a packed batch of mels.
struct ReferenceEncoding {
  nn::Var prenet;          // sum(T) x prenet_channels
  nn::Var frame_content;   // sum(T) x content_dim
  nn::Var phoneme_logits;  // sum(T) x n_phonemes
  nn::Var local_content;   // sum(S) x out_dim
  nn::Var local_speaker;   // sum(S) x out_dim, in (-1, 1)
  nn::Var speaker_vector;  // B x out_dim, mean of local_speaker rows
  nn::Var speaker_logits;  // B x n_speakers
  nn::Lengths frame_lengths;
  nn::Lengths local_lengths;
};

class ReferenceEncoder {
 public:
  ReferenceEncoder(nn::ParamStore& store, const ModelConfig& config, std::mt19937_64& rng);

  nn::Var Prenet(nn::Context& ctx, nn::Var mel, std::span<const int> lengths) const;
  nn::Var ContentEncode(nn::Context& ctx, nn::Var features,
                        std::span<const int> lengths) const;
  nn::Var PhonemeClassify(nn::Context& ctx, nn::Var frame_content) const;
  nn::Var ContentDownsample(nn::Context& ctx, nn::Var frame_content,
                            std::span<const int> lengths, nn::Lengths* out_lengths) const;
  nn::Var SpeakerDownsample(nn::Context& ctx, nn::Var prenet, std::span<const int> lengths,
                            nn::Lengths* out_lengths) const;
  nn::Var SpeakerClassify(nn::Context& ctx, nn::Var speaker_vector) const;

  // Full reference branch. Throws InvalidInput when the mel width or lengths
  // are inconsistent.
  ReferenceEncoding Encode(nn::Context& ctx, const nn::Matrix& mel,
                           std::span<const int> lengths) const;

 private:
  ModelConfig config_;
  nn::Conv1dLayer prenet_conv_[2];
  nn::BatchNormLayer prenet_norm_[2];
  nn::LinearLayer content_input_;
  std::vector<nn::FftBlock> content_blocks_;
  nn::LinearLayer phoneme_classifier_;
  DownsampleEncoder content_downsample_;
  DownsampleEncoder speaker_downsample_;
  nn::LinearLayer speaker_classifier_;
};

}  // namespace cdfse::model

#endif  // CDFSE_MODEL_REFERENCE_ENCODER_H_
