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

#include "cdfse/model/model.h"

#include "cdfse/common/errors.h"
#include "cdfse/nn/ops.h"

namespace cdfse::model {

namespace {

std::mt19937_64& InitRng(uint64_t seed) {
  thread_local std::mt19937_64 rng;
  rng.seed(seed);
  return rng;
}

}  // namespace

CdfseModel::CdfseModel(const ModelConfig& config, uint64_t init_seed)
    : config_(config),
      ref_encoder_(store_, config, InitRng(init_seed)),
      backbone_(store_, config, InitRng(init_seed + 1)) {
  if (config.backbone.mode == ConditioningMode::kCdfse) {
    attention_.emplace(store_, config, InitRng(init_seed + 2));
  }
}

ReferenceEncoding CdfseModel::EncodeReference(nn::Context& ctx, const nn::Matrix& mel,
                                              std::span<const int> lengths) const {
  return ref_encoder_.Encode(ctx, mel, lengths);
}

ModelOutput CdfseModel::Generate(nn::Context& ctx, ReferenceEncoding ref,
                                 std::span<const int> ids,
                                 std::span<const int> phoneme_lengths,
                                 std::span<const int> durations) const {
  if (phoneme_lengths.size() != ref.frame_lengths.size()) {
    throw InvalidInput("batch has " + std::to_string(phoneme_lengths.size()) +
                       " texts but " + std::to_string(ref.frame_lengths.size()) +
                       " references");
  }
  ModelOutput out;
  out.phoneme_lengths.assign(phoneme_lengths.begin(), phoneme_lengths.end());
  out.encoded = backbone_.PhonemeEncode(ctx, ids, phoneme_lengths);
  if (mode() == ConditioningMode::kCdfse) {
    FineGrainedEmbedding fgse =
        (*attention_)(ctx, out.encoded, phoneme_lengths, ref.local_content,
                      ref.local_speaker, ref.local_lengths);
    out.speaker = fgse.rows;
    out.attention = std::move(fgse.weights);
  } else {
    out.speaker = ref.speaker_vector;
  }
  out.conditioned = backbone_.Condition(ctx, out.encoded, phoneme_lengths, mode(), out.speaker);
  out.log_durations = backbone_.PredictDurations(ctx, out.conditioned, phoneme_lengths);
  if (durations.empty()) {
    out.durations = DurationsFromLog(out.log_durations.value());
  } else {
    out.durations.assign(durations.begin(), durations.end());
  }
  nn::Var up = backbone_.LengthRegulate(out.conditioned, phoneme_lengths, out.durations,
                                        &out.frame_lengths);
  out.mel = backbone_.DecodeMel(ctx, up, out.frame_lengths);
  out.ref = std::move(ref);
  return out;
}

ModelOutput CdfseModel::Forward(nn::Context& ctx, const nn::Matrix& mel,
                                std::span<const int> mel_lengths, std::span<const int> ids,
                                std::span<const int> phoneme_lengths,
                                std::span<const int> durations) const {
  return Generate(ctx, EncodeReference(ctx, mel, mel_lengths), ids, phoneme_lengths,
                  durations);
}

SynthesisResult CdfseModel::Synthesize(std::span<const int> ids,
                                       const nn::Matrix& reference_mel) const {
  nn::Graph graph(false);
  nn::Context ctx{graph, false};
  const int t = static_cast<int>(reference_mel.rows());
  const int l = static_cast<int>(ids.size());
  ModelOutput out = Forward(ctx, reference_mel, std::span<const int>(&t, 1), ids,
                            std::span<const int>(&l, 1));
  SynthesisResult r;
  r.mel = out.mel.value();
  if (!out.attention.empty()) r.attention = out.attention.front();
  r.durations = std::move(out.durations);
  return r;
}

namespace {

int64_t LinearCount(int64_t in, int64_t out, bool bias = true) {
  return in * out + (bias ? out : 0);
}

int64_t ConvCount(int64_t k, int64_t in, int64_t out) { return k * in * out + out; }

int64_t FftCount(int64_t d, int64_t filter, int64_t kernel) {
  return 4 * LinearCount(d, d) + 2 * d + ConvCount(kernel, d, filter) +
         ConvCount(1, filter, d) + 2 * d;
}

int64_t DownsampleCount(int64_t in, const RefEncoderConfig& rc) {
  int64_t n = 0;
  for (int c : rc.downsample_channels) {
    n += ConvCount(rc.downsample_kernel, in, c) + 2 * c;
    in = c;
  }
  return n + LinearCount(in, rc.out_dim);
}

}  // namespace

int64_t AnalyticParameterCount(const ModelConfig& c) {
  const RefEncoderConfig& rc = c.ref;
  const BackboneConfig& bc = c.backbone;
  int64_t n = 0;
  n += ConvCount(rc.prenet_kernel, c.n_mels, rc.prenet_channels) + 2 * rc.prenet_channels;
  n += ConvCount(rc.prenet_kernel, rc.prenet_channels, rc.prenet_channels) +
       2 * rc.prenet_channels;
  n += LinearCount(rc.prenet_channels, rc.content_dim);
  n += rc.content_blocks * FftCount(rc.content_dim, c.fft_filter, c.fft_kernel);
  n += LinearCount(rc.content_dim, c.n_phonemes);
  n += DownsampleCount(rc.content_dim, rc) + DownsampleCount(rc.prenet_channels, rc);
  n += LinearCount(rc.out_dim, c.n_speakers);
  if (bc.mode == ConditioningMode::kCdfse) {
    n += LinearCount(bc.hidden, c.attention_dim, false) +
         LinearCount(rc.out_dim, c.attention_dim, false);
  }
  n += static_cast<int64_t>(c.n_phonemes) * bc.hidden;
  n += (bc.encoder_blocks + bc.decoder_blocks) * FftCount(bc.hidden, c.fft_filter, c.fft_kernel);
  if (rc.out_dim != bc.hidden) n += LinearCount(rc.out_dim, bc.hidden, false);
  n += ConvCount(bc.duration_kernel, bc.hidden, bc.duration_filter) + 2 * bc.duration_filter;
  n += ConvCount(bc.duration_kernel, bc.duration_filter, bc.duration_filter) +
       2 * bc.duration_filter;
  n += LinearCount(bc.duration_filter, 1);
  n += LinearCount(bc.hidden, c.n_mels);
  return n;
}

}  // namespace cdfse::model
