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

#ifndef CDFSE_EVAL_METRICS_H_
#define CDFSE_EVAL_METRICS_H_

#include <span>
#include <vector>

#include "cdfse/frontend/corpus.h"
#include "cdfse/model/model.h"
#include "cdfse/nn/tensor.h"

namespace cdfse::eval {

// <a,b> / (|a| |b|), clamped to [-1, 1]. Throws InvalidInput for a zero
// vector or a size mismatch.
double CosineSimilarity(std::span<const double> a, std::span<const double> b);

// Utterance speaker vector of one mel, eval mode.
nn::RowVector SpeakerVector(const model::CdfseModel& model, const nn::Matrix& mel);

// Label of every downsampled column: the most frequent tag among its (at most
// f) source frames, ties going to the smaller phoneme id.
std::vector<int> ColumnLabels(std::span<const int> frame_tags, int factor);

struct AlignmentScore {
  int hits = 0;
  int total = 0;
  double rate() const { return total > 0 ? static_cast<double>(hits) / total : 0.0; }
};

// For each query phoneme that labels at least one column, whether the label
// with the largest summed attention mass is the query phoneme itself.
AlignmentScore PluralityScore(const nn::Matrix& weights, std::span<const int> query,
                              std::span<const int> column_labels);

// Argmax column label of every query row, restricted to queries whose phoneme
// labels some column; `expected` gets the matching query phonemes.
std::vector<int> ArgmaxLabels(const nn::Matrix& weights, std::span<const int> query,
                              std::span<const int> column_labels, std::vector<int>* expected);

struct EvalReport {
  double phoneme_accuracy = 0;  // frame-level classifier accuracy
  double speaker_accuracy = 0;  // utterance-level classifier accuracy
  double mel_mae = 0;           // teacher-forced durations, own reference
  double duration_mae = 0;      // predicted durations, own reference
  AlignmentScore plurality;     // cdfse only
  AlignmentScore reversed;      // probe utterances whose order is recovered
  double cosine_similarity = 0;  // synthesized vs ground truth speaker vectors
};

// Held-out evaluation, every utterance on its own, eval-mode batch norm.
// Cosine similarity synthesizes each utterance's text from the next held-out
// utterance of the same speaker and compares speaker vectors of the
// synthesized and the true mel.
EvalReport Evaluate(const model::CdfseModel& model,
                    std::span<const frontend::UtteranceRecord> records);

struct EmbeddingRow {
  int speaker = 0;
  int phoneme = 0;
  nn::RowVector values;
};

// Fine-grained embedding rows (utterance speaker vectors in cls mode) for
// every phoneme position, each utterance serving as its own reference.
std::vector<EmbeddingRow> ExportEmbeddings(const model::CdfseModel& model,
                                           std::span<const frontend::UtteranceRecord> records);

struct ClusterReport {
  double within_speaker = 0;  // mean distance to the own speaker centroid
  double cross_speaker = 0;   // mean distance to other speakers' centroids
  int separated_pairs = 0;    // phoneme sub-centroid pairs farther apart than their spread
  int total_pairs = 0;
  double separated_fraction() const {
    return total_pairs > 0 ? static_cast<double>(separated_pairs) / total_pairs : 0.0;
  }
};

ClusterReport AnalyzeEmbeddings(std::span<const EmbeddingRow> rows);

}  // namespace cdfse::eval

#endif  // CDFSE_EVAL_METRICS_H_
