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

#ifndef CDFSE_EVAL_DUMP_H_
#define CDFSE_EVAL_DUMP_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cdfse/eval/metrics.h"
#include "cdfse/nn/tensor.h"

namespace cdfse::eval {

// Text attention matrix:
//   #query_phonemes <id> ...
//   #ref_segments <column label> ...
//   L rows of S decimals
// Values use the shortest representation that parses back to the same double.
struct AttentionDump {
  std::vector<int> query_phonemes;
  std::vector<int> column_labels;
  nn::Matrix weights;  // L x S
};

void WriteAttentionDump(std::ostream& out, const AttentionDump& dump);
// Throws FormatError with the offending line.
AttentionDump ParseAttentionDump(std::istream& in);

// One `<speaker_id> <phoneme_id> <values...>` line per row.
void WriteEmbeddings(std::ostream& out, std::span<const EmbeddingRow> rows);
std::vector<EmbeddingRow> ParseEmbeddings(std::istream& in);

// Shortest round-trip decimal.
std::string FormatDouble(double v);

}  // namespace cdfse::eval

#endif  // CDFSE_EVAL_DUMP_H_
