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

#ifndef CDFSE_FRONTEND_SHUFFLE_H_
#define CDFSE_FRONTEND_SHUFFLE_H_

#include <random>
#include <span>
#include <vector>

#include "cdfse/frontend/alignment.h"
#include "cdfse/nn/tensor.h"

namespace cdfse::frontend {

struct ShuffledReference {
  nn::Matrix mel;
  std::vector<int> frame_tags;
  // order[i] is the source segment placed at position i.
  std::vector<int> order;
};

// Concatenates the phoneme segments of `mel` in the given order.
ShuffledReference ReorderSegments(const nn::Matrix& mel, const AlignmentTrack& align,
                                  std::span<const int> order);

// Training-time augmentation: the phoneme segments of the reference are put
// in a uniformly random order, destroying temporal correspondence with the
// text while keeping every frame.
ShuffledReference ShuffleByPhoneme(const nn::Matrix& mel, const AlignmentTrack& align,
                                   std::mt19937_64& rng);

}  // namespace cdfse::frontend

#endif  // CDFSE_FRONTEND_SHUFFLE_H_
