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

#ifndef CDFSE_MODEL_CONFIG_H_
#define CDFSE_MODEL_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "cdfse/nn/layers.h"
#include "cdfse/nn/optimizer.h"

namespace cdfse::model {

enum class ConditioningMode { kCdfse, kCls };

std::string ModeName(ConditioningMode mode);
// Throws ConfigError for anything but "cdfse" or "cls".
ConditioningMode ParseMode(const std::string& name);

struct RefEncoderConfig {
  int prenet_channels = 512;
  int prenet_kernel = 5;
  int content_dim = 256;
  int content_blocks = 4;
  std::vector<int> downsample_channels = {128, 256, 512, 512};
  int downsample_kernel = 3;
  // Downsample factor f = 2^pool_stages.
  int pool_stages = 4;
  int out_dim = 256;

  int factor() const { return 1 << pool_stages; }
};

struct BackboneConfig {
  int hidden = 256;
  int encoder_blocks = 4;
  int decoder_blocks = 4;
  int duration_filter = 256;
  int duration_kernel = 3;
  ConditioningMode mode = ConditioningMode::kCdfse;
};

struct ModelConfig {
  int n_mels = 80;
  int n_phonemes = 12;
  int n_speakers = 4;
  RefEncoderConfig ref;
  BackboneConfig backbone;
  // FFT blocks of the content encoder, phoneme encoder and decoder.
  int fft_heads = 2;
  int fft_filter = 1024;
  int fft_kernel = 9;
  // Reference attention: query/key width and softmax temperature; scores are
  // q.k / (temperature * sqrt(attention_dim)).
  int attention_dim = 128;
  double attention_temperature = 1.0;

  void Validate() const;
  nn::FftBlockConfig FftConfig(int dim) const;

  // Widths as published.
  static ModelConfig Full();
  // Desk-scale widths used by the toy corpus runs.
  static ModelConfig Toy();
};

struct LossWeights {
  double mel = 1.0;
  double duration = 0.1;
  double phoneme_ce = 0.1;
  double speaker_ce = 0.1;
};

struct TrainConfig {
  int batch_size = 8;
  int max_steps = 3000;
  nn::OptimizerConfig optimizer;
  LossWeights loss_weights;
  uint64_t seed = 7;
  // 0 disables periodic checkpoints; the final one is always written.
  int checkpoint_every = 0;

  void Validate() const;
  static TrainConfig Toy();
};

struct RunConfig {
  ModelConfig model = ModelConfig::Toy();
  TrainConfig train = TrainConfig::Toy();

  void Validate() const {
    model.Validate();
    train.Validate();
  }
};

// Flat `key=value` text, one field per line, '#' comments. Every field of
// RunConfig has a key; unknown keys and malformed values throw ConfigError
// naming the key. Keys absent from the text keep the values of `base`.
RunConfig ParseConfig(const std::string& text, const RunConfig& base = RunConfig{});
RunConfig LoadConfig(const std::string& path, const RunConfig& base = RunConfig{});
// Inverse of ParseConfig; doubles are printed with round-trip precision.
std::string ConfigText(const RunConfig& config);
std::vector<std::string> ConfigKeys();

}  // namespace cdfse::model

#endif  // CDFSE_MODEL_CONFIG_H_
