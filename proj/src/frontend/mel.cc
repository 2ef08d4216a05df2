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

#include "cdfse/frontend/mel.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "cdfse/common/errors.h"

namespace cdfse::frontend {
namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

void MelConfig::Validate() const {
  if (n_mels < 1) throw ConfigError("mel: n_mels must be >= 1");
  if (hop_size < 1 || hop_size >= frame_size) {
    throw ConfigError("mel: need 0 < hop_size < frame_size");
  }
  if (sample_rate < 1) throw ConfigError("mel: sample_rate must be positive");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw ConfigError("mel: need 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!(log_floor > 0.0)) throw ConfigError("mel: log_floor must be positive");
}

nn::Matrix MelFilterbank(const MelConfig& config) {
  const int bins = config.frame_size / 2 + 1;
  const double mel_lo = HzToMel(config.fmin);
  const double mel_hi = HzToMel(config.fmax);
  std::vector<double> edges(config.n_mels + 2);
  for (int i = 0; i < config.n_mels + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (config.n_mels + 1));
  }
  nn::Matrix fb = nn::Matrix::Zero(config.n_mels, bins);
  const double bin_hz = static_cast<double>(config.sample_rate) / config.frame_size;
  for (int m = 0; m < config.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      const double w = std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid));
      if (w > 0.0) fb(m, k) = w;
    }
  }
  return fb;
}

MelSpectrogram WavToMel(std::span<const double> samples, const MelConfig& config) {
  config.Validate();
  const int n = static_cast<int>(samples.size());
  if (n < config.frame_size) {
    throw InvalidInput("wav_to_mel: " + std::to_string(n) +
                       " samples, need at least frame_size=" +
                       std::to_string(config.frame_size));
  }
  const int frames = 1 + (n - config.frame_size) / config.hop_size;
  const int bins = config.frame_size / 2 + 1;
  const nn::Matrix fb = MelFilterbank(config);

  std::vector<double> window(config.frame_size);
  for (int i = 0; i < config.frame_size; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / config.frame_size);
  }

  Eigen::FFT<double> fft;
  std::vector<double> buffer(config.frame_size);
  std::vector<std::complex<double>> spectrum;
  nn::Matrix magnitude(frames, bins);
  for (int t = 0; t < frames; ++t) {
    const int start = t * config.hop_size;
    for (int i = 0; i < config.frame_size; ++i) buffer[i] = samples[start + i] * window[i];
    fft.fwd(spectrum, buffer);
    for (int k = 0; k < bins; ++k) magnitude(t, k) = std::abs(spectrum[k]);
  }

  MelSpectrogram mel;
  mel.config = config;
  mel.frames = (magnitude * fb.transpose()).cwiseMax(config.log_floor).array().log();
  return mel;
}

}  // namespace cdfse::frontend
