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

#include "cdfse/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "cdfse/common/errors.h"

namespace cdfse::eval {

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidInput("cosine similarity: sizes " + std::to_string(a.size()) + " and " +
                       std::to_string(b.size()) + " differ");
  }
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) throw InvalidInput("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<int> ColumnLabels(std::span<const int> frame_tags, int factor) {
  if (factor < 1) throw InvalidInput("column labels: factor must be positive");
  std::vector<int> labels;
  for (size_t start = 0; start < frame_tags.size(); start += factor) {
    const size_t end = std::min(frame_tags.size(), start + factor);
    std::map<int, int> counts;
    for (size_t t = start; t < end; ++t) ++counts[frame_tags[t]];
    int best = -1, best_count = 0;
    for (const auto& [tag, count] : counts) {
      if (count > best_count) {
        best = tag;
        best_count = count;
      }
    }
    labels.push_back(best);
  }
  return labels;
}

namespace {

void CheckShapes(const nn::Matrix& w, std::span<const int> query,
                 std::span<const int> labels) {
  if (w.rows() != static_cast<Eigen::Index>(query.size()) ||
      w.cols() != static_cast<Eigen::Index>(labels.size())) {
    throw InvalidInput("attention matrix is " + std::to_string(w.rows()) + "x" +
                       std::to_string(w.cols()) + " but there are " +
                       std::to_string(query.size()) + " queries and " +
                       std::to_string(labels.size()) + " column labels");
  }
}

}  // namespace

AlignmentScore PluralityScore(const nn::Matrix& weights, std::span<const int> query,
                              std::span<const int> column_labels) {
  CheckShapes(weights, query, column_labels);
  const std::set<int> present(column_labels.begin(), column_labels.end());
  AlignmentScore score;
  for (size_t i = 0; i < query.size(); ++i) {
    if (!present.contains(query[i])) continue;
    std::map<int, double> mass;
    for (size_t j = 0; j < column_labels.size(); ++j) mass[column_labels[j]] += weights(i, j);
    int best = -1;
    double best_mass = -1;
    for (const auto& [label, m] : mass) {
      if (m > best_mass) {
        best = label;
        best_mass = m;
      }
    }
    ++score.total;
    if (best == query[i]) ++score.hits;
  }
  return score;
}

std::vector<int> ArgmaxLabels(const nn::Matrix& weights, std::span<const int> query,
                              std::span<const int> column_labels, std::vector<int>* expected) {
  CheckShapes(weights, query, column_labels);
  const std::set<int> present(column_labels.begin(), column_labels.end());
  std::vector<int> out;
  if (expected != nullptr) expected->clear();
  for (size_t i = 0; i < query.size(); ++i) {
    if (!present.contains(query[i])) continue;
    Eigen::Index arg;
    weights.row(i).maxCoeff(&arg);
    out.push_back(column_labels[arg]);
    if (expected != nullptr) expected->push_back(query[i]);
  }
  return out;
}

namespace {

int ArgmaxRow(const nn::Matrix& m, Eigen::Index row) {
  Eigen::Index arg;
  m.row(row).maxCoeff(&arg);
  return static_cast<int>(arg);
}

bool AllDistinct(const std::vector<int>& v) {
  return std::set<int>(v.begin(), v.end()).size() == v.size();
}

}  // namespace

nn::RowVector SpeakerVector(const model::CdfseModel& model, const nn::Matrix& mel) {
  nn::Graph graph(false);
  nn::Context ctx{graph, false};
  const int t = static_cast<int>(mel.rows());
  return model.EncodeReference(ctx, mel, std::span<const int>(&t, 1)).speaker_vector.value();
}

EvalReport Evaluate(const model::CdfseModel& model,
                    std::span<const frontend::UtteranceRecord> records) {
  if (records.empty()) throw InvalidInput("evaluation set is empty");
  const int factor = model.config().ref.factor();
  EvalReport rep;
  int64_t frames = 0, frame_hits = 0, speaker_hits = 0, phonemes = 0;
  double abs_mel = 0, abs_dur = 0, cosine = 0;
  for (size_t u = 0; u < records.size(); ++u) {
    const frontend::UtteranceRecord& r = records[u];
    nn::Graph graph(false);
    nn::Context ctx{graph, false};
    const int t = r.num_frames();
    const int l = static_cast<int>(r.phonemes.size());
    model::ReferenceEncoding ref =
        model.EncodeReference(ctx, r.mel, std::span<const int>(&t, 1));
    const nn::Matrix& logits = ref.phoneme_logits.value();
    for (int i = 0; i < t; ++i) frame_hits += ArgmaxRow(logits, i) == r.alignment.frame_tags[i];
    frames += t;
    speaker_hits += ArgmaxRow(ref.speaker_logits.value(), 0) == r.speaker_id;

    model::ModelOutput out =
        model.Generate(ctx, ref, r.phonemes, std::span<const int>(&l, 1), r.durations);
    abs_mel += (out.mel.value() - r.mel).cwiseAbs().sum();
    const std::vector<int> predicted = model::DurationsFromLog(out.log_durations.value());
    for (int i = 0; i < l; ++i) abs_dur += std::abs(predicted[i] - r.durations[i]);
    phonemes += l;

    if (model.mode() == model::ConditioningMode::kCdfse) {
      const std::vector<int> labels = ColumnLabels(r.alignment.frame_tags, factor);
      AlignmentScore s = PluralityScore(out.attention.front(), r.phonemes, labels);
      rep.plurality.hits += s.hits;
      rep.plurality.total += s.total;
      if (AllDistinct(r.phonemes)) {
        std::vector<int> text(r.phonemes.rbegin(), r.phonemes.rend());
        std::vector<int> durs(r.durations.rbegin(), r.durations.rend());
        model::ModelOutput rev =
            model.Generate(ctx, ref, text, std::span<const int>(&l, 1), durs);
        std::vector<int> expected;
        std::vector<int> got = ArgmaxLabels(rev.attention.front(), text, labels, &expected);
        ++rep.reversed.total;
        if (!got.empty() && got == expected) ++rep.reversed.hits;
      }
    }

    size_t ref_index = u;
    for (size_t k = 1; k < records.size(); ++k) {
      const size_t j = (u + k) % records.size();
      if (records[j].speaker_id == r.speaker_id) {
        ref_index = j;
        break;
      }
    }
    model::SynthesisResult synth = model.Synthesize(r.phonemes, records[ref_index].mel);
    const nn::RowVector a = SpeakerVector(model, synth.mel);
    const nn::RowVector b = SpeakerVector(model, r.mel);
    cosine += CosineSimilarity(std::span<const double>(a.data(), a.size()),
                               std::span<const double>(b.data(), b.size()));
  }
  rep.phoneme_accuracy = static_cast<double>(frame_hits) / frames;
  rep.speaker_accuracy = static_cast<double>(speaker_hits) / records.size();
  rep.mel_mae = abs_mel / (static_cast<double>(frames) * model.config().n_mels);
  rep.duration_mae = abs_dur / phonemes;
  rep.cosine_similarity = cosine / records.size();
  return rep;
}

std::vector<EmbeddingRow> ExportEmbeddings(const model::CdfseModel& model,
                                           std::span<const frontend::UtteranceRecord> records) {
  std::vector<EmbeddingRow> rows;
  for (const frontend::UtteranceRecord& r : records) {
    nn::Graph graph(false);
    nn::Context ctx{graph, false};
    const int t = r.num_frames();
    const int l = static_cast<int>(r.phonemes.size());
    model::ModelOutput out = model.Forward(ctx, r.mel, std::span<const int>(&t, 1),
                                           r.phonemes, std::span<const int>(&l, 1),
                                           r.durations);
    const nn::Matrix& s = out.speaker.value();
    for (int i = 0; i < l; ++i) {
      const Eigen::Index row = model.mode() == model::ConditioningMode::kCdfse ? i : 0;
      rows.push_back({r.speaker_id, r.phonemes[i], s.row(row)});
    }
  }
  return rows;
}

ClusterReport AnalyzeEmbeddings(std::span<const EmbeddingRow> rows) {
  if (rows.empty()) throw InvalidInput("no embeddings to analyze");
  std::map<int, nn::RowVector> speaker_sum;
  std::map<int, int> speaker_count;
  std::map<std::pair<int, int>, nn::RowVector> sub_sum;
  std::map<std::pair<int, int>, int> sub_count;
  for (const EmbeddingRow& e : rows) {
    auto [it, fresh] = speaker_sum.try_emplace(e.speaker, nn::RowVector::Zero(e.values.size()));
    it->second += e.values;
    ++speaker_count[e.speaker];
    const auto key = std::make_pair(e.speaker, e.phoneme);
    auto [sit, sfresh] = sub_sum.try_emplace(key, nn::RowVector::Zero(e.values.size()));
    sit->second += e.values;
    ++sub_count[key];
  }
  for (auto& [s, v] : speaker_sum) v /= speaker_count[s];
  for (auto& [k, v] : sub_sum) v /= sub_count[k];

  ClusterReport rep;
  int64_t cross_terms = 0;
  std::map<std::pair<int, int>, double> sub_ms;
  for (const EmbeddingRow& e : rows) {
    rep.within_speaker += (e.values - speaker_sum[e.speaker]).norm();
    for (const auto& [s, c] : speaker_sum) {
      if (s == e.speaker) continue;
      rep.cross_speaker += (e.values - c).norm();
      ++cross_terms;
    }
    const auto key = std::make_pair(e.speaker, e.phoneme);
    sub_ms[key] += (e.values - sub_sum[key]).squaredNorm();
  }
  rep.within_speaker /= static_cast<double>(rows.size());
  rep.cross_speaker = cross_terms > 0 ? rep.cross_speaker / cross_terms : 0.0;
  for (auto& [k, v] : sub_ms) v /= sub_count[k];

  for (auto a = sub_sum.begin(); a != sub_sum.end(); ++a) {
    for (auto b = std::next(a); b != sub_sum.end(); ++b) {
      if (a->first.first != b->first.first) continue;
      const double spread = std::sqrt(0.5 * (sub_ms[a->first] + sub_ms[b->first]));
      ++rep.total_pairs;
      if ((a->second - b->second).norm() > spread) ++rep.separated_pairs;
    }
  }
  return rep;
}

}  // namespace cdfse::eval
