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

#include "cdfse/frontend/shuffle.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "cdfse/common/errors.h"

namespace cdfse::frontend {

ShuffledReference ReorderSegments(const nn::Matrix& mel, const AlignmentTrack& align,
                                  std::span<const int> order) {
  if (mel.rows() != align.num_frames()) {
    throw InvalidInput("shuffle: mel has " + std::to_string(mel.rows()) +
                       " frames but alignment has " +
                       std::to_string(align.num_frames()));
  }
  const int n = static_cast<int>(align.segments.size());
  std::vector<bool> seen(n, false);
  if (static_cast<int>(order.size()) != n) {
    throw InvalidInput("shuffle: order is not a permutation of the segments");
  }
  for (int i : order) {
    if (i < 0 || i >= n || seen[i]) {
      throw InvalidInput("shuffle: order is not a permutation of the segments");
    }
    seen[i] = true;
  }
  ShuffledReference out;
  out.mel.resize(mel.rows(), mel.cols());
  out.frame_tags.reserve(align.frame_tags.size());
  out.order.assign(order.begin(), order.end());
  int row = 0;
  for (int i : order) {
    const PhonemeSegment& seg = align.segments[i];
    out.mel.middleRows(row, seg.length()) = mel.middleRows(seg.start, seg.length());
    out.frame_tags.insert(out.frame_tags.end(), seg.length(), seg.phoneme);
    row += seg.length();
  }
  return out;
}

ShuffledReference ShuffleByPhoneme(const nn::Matrix& mel, const AlignmentTrack& align,
                                   std::mt19937_64& rng) {
  std::vector<int> order(align.segments.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return ReorderSegments(mel, align, order);
}

}  // namespace cdfse::frontend
