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

#include "cdfse/model/reference_encoder.h"

#include <algorithm>
#include <string>

#include "cdfse/common/errors.h"
#include "cdfse/nn/ops.h"

namespace cdfse::model {

using nn::Context;
using nn::Lengths;
using nn::Var;

nn::Lengths DownsampledLengths(std::span<const int> lengths, int pool_stages) {
  const int f = 1 << pool_stages;
  Lengths out;
  out.reserve(lengths.size());
  for (int t : lengths) out.push_back((t + f - 1) / f);
  return out;
}

DownsampleEncoder::DownsampleEncoder(nn::ParamStore& store, const std::string& name,
                                     int in_dim, const RefEncoderConfig& config,
                                     std::mt19937_64& rng)
    : pool_stages_(config.pool_stages) {
  if (config.pool_stages < 0 || config.pool_stages > 6) {
    throw ConfigError(name + ": pool_stages must lie in [0, 6], got " +
                      std::to_string(config.pool_stages));
  }
  int channels = in_dim;
  for (size_t i = 0; i < config.downsample_channels.size(); ++i) {
    const std::string layer = name + ".conv" + std::to_string(i);
    convs_.emplace_back(store, layer, channels, config.downsample_channels[i],
                        config.downsample_kernel, rng);
    norms_.emplace_back(store, layer + ".norm", config.downsample_channels[i]);
    channels = config.downsample_channels[i];
  }
  output_ = nn::LinearLayer(store, name + ".output", channels, config.out_dim, rng);
}

Var DownsampleEncoder::operator()(Context& ctx, Var x, std::span<const int> lengths,
                                  Lengths* out_lengths) const {
  Lengths cur(lengths.begin(), lengths.end());
  const int conv_pools = std::min<int>(pool_stages_, static_cast<int>(convs_.size()));
  for (size_t i = 0; i < convs_.size(); ++i) {
    x = norms_[i](ctx, nn::Relu(convs_[i](ctx, x, cur)));
    if (static_cast<int>(i) < conv_pools) {
      x = nn::AvgPool1d(x, cur);
      cur = nn::PooledLengths(cur);
    }
  }
  for (int i = conv_pools; i < pool_stages_; ++i) {
    x = nn::AvgPool1d(x, cur);
    cur = nn::PooledLengths(cur);
  }
  if (out_lengths != nullptr) *out_lengths = cur;
  return nn::Tanh(output_(ctx, x));
}

ReferenceEncoder::ReferenceEncoder(nn::ParamStore& store, const ModelConfig& config,
                                   std::mt19937_64& rng)
    : config_(config) {
  config.Validate();
  const RefEncoderConfig& rc = config.ref;
  int channels = config.n_mels;
  for (int i = 0; i < 2; ++i) {
    const std::string name = "ref.prenet.conv" + std::to_string(i);
    prenet_conv_[i] =
        nn::Conv1dLayer(store, name, channels, rc.prenet_channels, rc.prenet_kernel, rng, 0.5);
    prenet_norm_[i] = nn::BatchNormLayer(store, name + ".norm", rc.prenet_channels);
    channels = rc.prenet_channels;
  }
  content_input_ =
      nn::LinearLayer(store, "ref.content.input", rc.prenet_channels, rc.content_dim, rng);
  for (int i = 0; i < rc.content_blocks; ++i) {
    content_blocks_.emplace_back(store, "ref.content.block" + std::to_string(i),
                                 config.FftConfig(rc.content_dim), rng);
  }
  phoneme_classifier_ = nn::LinearLayer(store, "ref.phoneme_classifier", rc.content_dim,
                                        config.n_phonemes, rng, true, 0.1);
  content_downsample_ =
      DownsampleEncoder(store, "ref.content_downsample", rc.content_dim, rc, rng);
  speaker_downsample_ =
      DownsampleEncoder(store, "ref.speaker_downsample", rc.prenet_channels, rc, rng);
  speaker_classifier_ = nn::LinearLayer(store, "ref.speaker_classifier", rc.out_dim,
                                        config.n_speakers, rng, true, 0.1);
}

Var ReferenceEncoder::Prenet(Context& ctx, Var mel, std::span<const int> lengths) const {
  if (ctx.training && mel.rows() < 2) {
    throw InvalidInput("prenet: batch norm in training needs at least 2 frames, got " +
                       std::to_string(mel.rows()));
  }
  Var x = mel;
  for (int i = 0; i < 2; ++i) {
    x = prenet_norm_[i](ctx, nn::Relu(prenet_conv_[i](ctx, x, lengths)));
  }
  return x;
}

Var ReferenceEncoder::ContentEncode(Context& ctx, Var features,
                                    std::span<const int> lengths) const {
  Var x = content_input_(ctx, features);
  x = nn::AddConstant(x, nn::SinusoidalPositions(lengths, config_.ref.content_dim));
  for (const nn::FftBlock& block : content_blocks_) x = block(ctx, x, lengths);
  return x;
}

Var ReferenceEncoder::PhonemeClassify(Context& ctx, Var frame_content) const {
  return phoneme_classifier_(ctx, frame_content);
}

Var ReferenceEncoder::ContentDownsample(Context& ctx, Var frame_content,
                                        std::span<const int> lengths,
                                        Lengths* out_lengths) const {
  return content_downsample_(ctx, frame_content, lengths, out_lengths);
}

Var ReferenceEncoder::SpeakerDownsample(Context& ctx, Var prenet,
                                        std::span<const int> lengths,
                                        Lengths* out_lengths) const {
  return speaker_downsample_(ctx, prenet, lengths, out_lengths);
}

Var ReferenceEncoder::SpeakerClassify(Context& ctx, Var speaker_vector) const {
  return speaker_classifier_(ctx, speaker_vector);
}

ReferenceEncoding ReferenceEncoder::Encode(Context& ctx, const nn::Matrix& mel,
                                           std::span<const int> lengths) const {
  if (mel.cols() != config_.n_mels) {
    throw InvalidInput("reference mel has " + std::to_string(mel.cols()) +
                       " bins, model expects " + std::to_string(config_.n_mels));
  }
  for (int t : lengths) {
    if (t < 1) throw InvalidInput("reference mel must have at least one frame");
  }
  if (nn::TotalLength(lengths) != mel.rows()) {
    throw InvalidInput("reference lengths do not add up to the mel frame count");
  }
  ReferenceEncoding r;
  r.frame_lengths.assign(lengths.begin(), lengths.end());
  r.prenet = Prenet(ctx, ctx.graph.Constant(mel), lengths);
  r.frame_content = ContentEncode(ctx, r.prenet, lengths);
  r.phoneme_logits = PhonemeClassify(ctx, r.frame_content);
  Lengths speaker_lengths;
  r.local_content = ContentDownsample(ctx, r.frame_content, lengths, &r.local_lengths);
  r.local_speaker = SpeakerDownsample(ctx, r.prenet, lengths, &speaker_lengths);
  r.speaker_vector = nn::SegmentMean(r.local_speaker, r.local_lengths);
  r.speaker_logits = SpeakerClassify(ctx, r.speaker_vector);
  return r;
}

}  // namespace cdfse::model
