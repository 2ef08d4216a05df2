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

#include "cdfse/model/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "cdfse/common/errors.h"

namespace cdfse::model {

std::string ModeName(ConditioningMode mode) {
  return mode == ConditioningMode::kCdfse ? "cdfse" : "cls";
}

ConditioningMode ParseMode(const std::string& name) {
  if (name == "cdfse") return ConditioningMode::kCdfse;
  if (name == "cls") return ConditioningMode::kCls;
  throw ConfigError("mode: expected cdfse or cls, got '" + name + "'");
}

namespace {

void Require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

void ModelConfig::Validate() const {
  Require(n_mels > 0, "n_mels", "must be positive");
  Require(n_phonemes > 0, "n_phonemes", "must be positive");
  Require(n_speakers > 0, "n_speakers", "must be positive");
  Require(ref.prenet_channels > 0, "prenet_channels", "must be positive");
  Require(ref.prenet_kernel > 0 && ref.prenet_kernel % 2 == 1, "prenet_kernel",
          "must be odd and positive");
  Require(ref.content_dim > 0, "content_dim", "must be positive");
  Require(ref.content_blocks >= 0, "content_blocks", "must be non-negative");
  Require(ref.downsample_channels.size() == 4, "downsample_channels",
          "needs exactly 4 entries");
  for (int c : ref.downsample_channels) {
    Require(c > 0, "downsample_channels", "entries must be positive");
  }
  Require(ref.downsample_kernel > 0 && ref.downsample_kernel % 2 == 1, "downsample_kernel",
          "must be odd and positive");
  Require(ref.pool_stages >= 0 && ref.pool_stages <= 6, "downsample_factor",
          "must be a power of two between 1 and 64");
  Require(ref.out_dim > 0, "out_dim", "must be positive");
  Require(backbone.hidden > 0, "hidden", "must be positive");
  Require(backbone.encoder_blocks >= 0, "encoder_blocks", "must be non-negative");
  Require(backbone.decoder_blocks >= 0, "decoder_blocks", "must be non-negative");
  Require(backbone.duration_filter > 0, "duration_filter", "must be positive");
  Require(backbone.duration_kernel > 0 && backbone.duration_kernel % 2 == 1,
          "duration_kernel", "must be odd and positive");
  Require(fft_heads > 0, "fft_heads", "must be positive");
  Require(ref.content_dim % fft_heads == 0, "content_dim", "must be divisible by fft_heads");
  Require(backbone.hidden % fft_heads == 0, "hidden", "must be divisible by fft_heads");
  Require(fft_filter > 0, "fft_filter", "must be positive");
  Require(fft_kernel > 0 && fft_kernel % 2 == 1, "fft_kernel", "must be odd and positive");
  Require(attention_dim > 0, "attention_dim", "must be positive");
  Require(attention_temperature > 0, "attention_temperature", "must be positive");
}

nn::FftBlockConfig ModelConfig::FftConfig(int dim) const {
  nn::FftBlockConfig c;
  c.dim = dim;
  c.heads = fft_heads;
  c.ff_filter = fft_filter;
  c.ff_kernel1 = fft_kernel;
  c.ff_kernel2 = 1;
  return c;
}

ModelConfig ModelConfig::Full() { return ModelConfig{}; }

ModelConfig ModelConfig::Toy() {
  ModelConfig c;
  c.ref.prenet_channels = 64;
  c.ref.content_dim = 64;
  c.ref.downsample_channels = {32, 64, 64, 64};
  c.backbone.hidden = 64;
  c.backbone.encoder_blocks = 2;
  c.backbone.decoder_blocks = 2;
  c.backbone.duration_filter = 64;
  c.fft_filter = 128;
  c.fft_kernel = 3;
  c.attention_dim = 64;
  return c;
}

void TrainConfig::Validate() const {
  Require(batch_size >= 1, "batch_size", "must be at least 1");
  Require(max_steps >= 0, "max_steps", "must be non-negative");
  Require(checkpoint_every >= 0, "checkpoint_every", "must be non-negative");
  Require(loss_weights.mel >= 0, "w_mel", "must be non-negative");
  Require(loss_weights.duration >= 0, "w_duration", "must be non-negative");
  Require(loss_weights.phoneme_ce >= 0, "w_phoneme_ce", "must be non-negative");
  Require(loss_weights.speaker_ce >= 0, "w_speaker_ce", "must be non-negative");
  optimizer.Validate();
}

TrainConfig TrainConfig::Toy() {
  TrainConfig c;
  c.optimizer.warmup_steps = 400;
  return c;
}

namespace {

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(key + ": cannot parse '" + text + "'");
  }
  return value;
}

std::vector<int> ParseIntList(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseNumber<int>(key, item));
  return out;
}

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

template <typename T>
Field NumberField(const std::string& key, T* value) {
  return {key,
          [value] {
            if constexpr (std::is_floating_point_v<T>) return FormatDouble(*value);
            else return std::to_string(*value);
          },
          [key, value](const std::string& s) { *value = ParseNumber<T>(key, s); }};
}

std::vector<Field> Fields(RunConfig& c) {
  ModelConfig& m = c.model;
  TrainConfig& t = c.train;
  std::vector<Field> f = {
      {"mode", [&m] { return ModeName(m.backbone.mode); },
       [&m](const std::string& s) { m.backbone.mode = ParseMode(s); }},
      {"downsample_factor", [&m] { return std::to_string(m.ref.factor()); },
       [&m](const std::string& s) {
         const int factor = ParseNumber<int>("downsample_factor", s);
         int stages = 0;
         while (stages <= 6 && (1 << stages) != factor) ++stages;
         Require(stages <= 6, "downsample_factor", "must be a power of two between 1 and 64");
         m.ref.pool_stages = stages;
       }},
      NumberField("n_mels", &m.n_mels),
      NumberField("n_phonemes", &m.n_phonemes),
      NumberField("n_speakers", &m.n_speakers),
      NumberField("prenet_channels", &m.ref.prenet_channels),
      NumberField("prenet_kernel", &m.ref.prenet_kernel),
      NumberField("content_dim", &m.ref.content_dim),
      NumberField("content_blocks", &m.ref.content_blocks),
      {"downsample_channels",
       [&m] {
         std::string s;
         for (size_t i = 0; i < m.ref.downsample_channels.size(); ++i) {
           if (i) s += ",";
           s += std::to_string(m.ref.downsample_channels[i]);
         }
         return s;
       },
       [&m](const std::string& s) {
         m.ref.downsample_channels = ParseIntList("downsample_channels", s);
       }},
      NumberField("downsample_kernel", &m.ref.downsample_kernel),
      NumberField("out_dim", &m.ref.out_dim),
      NumberField("hidden", &m.backbone.hidden),
      NumberField("encoder_blocks", &m.backbone.encoder_blocks),
      NumberField("decoder_blocks", &m.backbone.decoder_blocks),
      NumberField("duration_filter", &m.backbone.duration_filter),
      NumberField("duration_kernel", &m.backbone.duration_kernel),
      NumberField("fft_heads", &m.fft_heads),
      NumberField("fft_filter", &m.fft_filter),
      NumberField("fft_kernel", &m.fft_kernel),
      NumberField("attention_dim", &m.attention_dim),
      NumberField("attention_temperature", &m.attention_temperature),
      NumberField("batch_size", &t.batch_size),
      NumberField("max_steps", &t.max_steps),
      NumberField("seed", &t.seed),
      NumberField("checkpoint_every", &t.checkpoint_every),
      NumberField("beta1", &t.optimizer.beta1),
      NumberField("beta2", &t.optimizer.beta2),
      NumberField("epsilon", &t.optimizer.epsilon),
      NumberField("warmup_steps", &t.optimizer.warmup_steps),
      NumberField("base_scale", &t.optimizer.base_scale),
      NumberField("w_mel", &t.loss_weights.mel),
      NumberField("w_duration", &t.loss_weights.duration),
      NumberField("w_phoneme_ce", &t.loss_weights.phoneme_ce),
      NumberField("w_speaker_ce", &t.loss_weights.speaker_ce),
  };
  return f;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig ParseConfig(const std::string& text, const RunConfig& base) {
  RunConfig out = base;
  std::vector<Field> fields = Fields(out);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line + ": expected key=value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    bool found = false;
    for (Field& f : fields) {
      if (f.key == key) {
        f.set(value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError(key + ": unknown config key");
  }
  out.Validate();
  return out;
}

RunConfig LoadConfig(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), base);
}

std::string ConfigText(const RunConfig& config) {
  RunConfig copy = config;
  std::string out;
  for (const Field& f : Fields(copy)) out += f.key + "=" + f.get() + "\n";
  return out;
}

std::vector<std::string> ConfigKeys() {
  RunConfig scratch;
  std::vector<std::string> keys;
  for (const Field& f : Fields(scratch)) keys.push_back(f.key);
  return keys;
}

}  // namespace cdfse::model
