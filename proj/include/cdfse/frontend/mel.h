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

#ifndef CDFSE_FRONTEND_MEL_H_
#define CDFSE_FRONTEND_MEL_H_

#include <span>

#include "cdfse/nn/tensor.h"

namespace cdfse::frontend {

struct MelConfig {
  int sample_rate = 22050;
  int n_mels = 80;
  int frame_size = 1024;
  int hop_size = 256;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-5;

  void Validate() const;
};

// T x n_mels natural-log mel magnitudes.
struct MelSpectrogram {
  nn::Matrix frames;
  MelConfig config;

  int num_frames() const { return static_cast<int>(frames.rows()); }
};

// n_mels x (frame_size/2 + 1) triangular filters on the HTK mel scale, unit
// peak, spanning [fmin, fmax].
nn::Matrix MelFilterbank(const MelConfig& config);

// Hann-windowed magnitude STFT without centering, mel projection and
// log(max(x, floor)). T = 1 + floor((len - frame_size) / hop_size).
MelSpectrogram WavToMel(std::span<const double> samples, const MelConfig& config);

}  // namespace cdfse::frontend

#endif  // CDFSE_FRONTEND_MEL_H_
