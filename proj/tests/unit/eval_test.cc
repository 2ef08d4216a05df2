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

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"

#include "cdfse/common/errors.h"
#include "cdfse/eval/dump.h"
#include "cdfse/eval/metrics.h"

namespace cdfse::eval {
namespace {

TEST(CosineTest, Examples) {
  const std::vector<double> a{1, 0, 0}, b{0, 2, 0}, c{-3, 0, 0}, d{2, 2, 0};
  EXPECT_DOUBLE_EQ(CosineSimilarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(CosineSimilarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(CosineSimilarity(a, c), -1.0);
  EXPECT_NEAR(CosineSimilarity(a, d), 1.0 / std::sqrt(2.0), 1e-15);
  const std::vector<double> zero{0, 0, 0}, short_vec{1, 2};
  EXPECT_THROW(CosineSimilarity(a, zero), InvalidInput);
  EXPECT_THROW(CosineSimilarity(a, short_vec), InvalidInput);
}

TEST(CosineTest, ScaleInvariantAndBounded) {
  std::vector<double> a{0.3, -1.2, 4.0, 0.01}, b{2.0, 0.5, -0.7, 9.0};
  const double base = CosineSimilarity(a, b);
  for (double& v : a) v *= 17.5;
  EXPECT_NEAR(CosineSimilarity(a, b), base, 1e-14);
  EXPECT_LE(std::abs(base), 1.0);
}

TEST(ColumnLabelsTest, MajorityWithTiesToSmallerId) {
  const std::vector<int> tags{3, 3, 1, 1, 2, 2, 2, 5, 4, 4};
  EXPECT_EQ(ColumnLabels(tags, 1), tags);
  // Columns [3,3,1,1] [2,2,2,5] [4,4]; the first is a tie.
  EXPECT_EQ(ColumnLabels(tags, 4), (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(ColumnLabels(tags, 16), (std::vector<int>{2}));
}

TEST(AlignmentTest, PluralityAndArgmax) {
  // Columns labelled [A=0, B=1, A=0]; queries [0, 1, 2].
  nn::Matrix w(3, 3);
  w << 0.3, 0.4, 0.3,  // A mass 0.6 beats B 0.4 though the argmax is B
      0.5, 0.2, 0.3,   // B has only 0.2, miss
      0.1, 0.8, 0.1;   // phoneme 2 labels no column, skipped
  const std::vector<int> query{0, 1, 2}, labels{0, 1, 0};
  AlignmentScore s = PluralityScore(w, query, labels);
  EXPECT_EQ(s.total, 2);
  EXPECT_EQ(s.hits, 1);
  EXPECT_DOUBLE_EQ(s.rate(), 0.5);
  std::vector<int> expected;
  EXPECT_EQ(ArgmaxLabels(w, query, labels, &expected), (std::vector<int>{1, 0}));
  EXPECT_EQ(expected, (std::vector<int>{0, 1}));
}

TEST(AlignmentTest, ReversedProbeOracle) {
  // A perfectly aligned matrix for reference [A,B,C] and text [C,B,A].
  nn::Matrix w = nn::Matrix::Zero(3, 3);
  w(0, 2) = w(1, 1) = w(2, 0) = 1.0;
  const std::vector<int> labels{7, 8, 9}, text{9, 8, 7};
  std::vector<int> expected;
  EXPECT_EQ(ArgmaxLabels(w, text, labels, &expected), text);
  EXPECT_EQ(expected, text);
  EXPECT_EQ(PluralityScore(w, text, labels).hits, 3);
}

EmbeddingRow Row(int speaker, int phoneme, std::initializer_list<double> v) {
  EmbeddingRow r;
  r.speaker = speaker;
  r.phoneme = phoneme;
  r.values = Eigen::Map<const nn::RowVector>(v.begin(), static_cast<Eigen::Index>(v.size()));
  return r;
}

TEST(ClusterTest, HandComputedDistances) {
  // Speaker 0 centroid (0,0), speaker 1 centroid (10,0).
  const std::vector<EmbeddingRow> rows{
      Row(0, 0, {-1, 0}), Row(0, 0, {-1, 0}), Row(0, 1, {1, 0}), Row(0, 1, {1, 0}),
      Row(1, 0, {10, 1}), Row(1, 0, {10, 1.2}), Row(1, 1, {10, -1}), Row(1, 1, {10, -1.2}),
  };
  ClusterReport r = AnalyzeEmbeddings(rows);
  EXPECT_NEAR(r.within_speaker, (4 * 1.0 + 2 * 1.0 + 2 * 1.2) / 8.0, 1e-12);
  const double cross = (2 * std::hypot(11, 0) + 2 * std::hypot(9, 0) +
                        2 * std::hypot(10, 1) + 2 * std::hypot(10, 1.2)) / 8.0;
  EXPECT_NEAR(r.cross_speaker, cross, 1e-12);
  EXPECT_LT(r.within_speaker, r.cross_speaker);
  // One sub-centroid pair per speaker; both far apart relative to their spread.
  EXPECT_EQ(r.total_pairs, 2);
  EXPECT_EQ(r.separated_pairs, 2);
}

TEST(ClusterTest, OverlappingSubCentroidsAreNotSeparated) {
  const std::vector<EmbeddingRow> rows{
      Row(0, 0, {-1, 0}), Row(0, 0, {1, 0}), Row(0, 1, {-1, 0.1}), Row(0, 1, {1, 0.1}),
      Row(1, 0, {5, 0}), Row(1, 0, {5, 0}), Row(1, 1, {6, 0}), Row(1, 1, {6, 0}),
  };
  ClusterReport r = AnalyzeEmbeddings(rows);
  EXPECT_EQ(r.total_pairs, 2);
  EXPECT_EQ(r.separated_pairs, 1);
  EXPECT_DOUBLE_EQ(r.separated_fraction(), 0.5);
}

TEST(DumpTest, AttentionRoundTripIsBitExact) {
  AttentionDump d;
  d.query_phonemes = {3, 0, 11};
  d.column_labels = {0, 3};
  d.weights.resize(3, 2);
  d.weights << 1.0 / 3.0, 2.0 / 3.0, 0.1, 0.9, std::numeric_limits<double>::denorm_min(), 1.0;
  std::stringstream ss;
  WriteAttentionDump(ss, d);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "#query_phonemes 3 0 11");
  AttentionDump back = ParseAttentionDump(ss);
  EXPECT_EQ(back.query_phonemes, d.query_phonemes);
  EXPECT_EQ(back.column_labels, d.column_labels);
  EXPECT_EQ(back.weights, d.weights);
  std::stringstream again;
  WriteAttentionDump(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(DumpTest, AttentionParseErrorsNameTheLine) {
  std::stringstream bad("#query_phonemes 1 2\n#ref_segments 4\n0.5\n0.5 0.5\n");
  try {
    ParseAttentionDump(bad);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  std::stringstream no_header("0.5 0.5\n");
  EXPECT_THROW(ParseAttentionDump(no_header), FormatError);
}

TEST(DumpTest, EmbeddingRoundTrip) {
  const std::vector<EmbeddingRow> rows{Row(2, 5, {0.1, -3e-300, 7}), Row(0, 1, {1, 2, 3})};
  std::stringstream ss;
  WriteEmbeddings(ss, rows);
  std::vector<EmbeddingRow> back = ParseEmbeddings(ss);
  ASSERT_EQ(back.size(), 2u);
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].speaker, rows[i].speaker);
    EXPECT_EQ(back[i].phoneme, rows[i].phoneme);
    EXPECT_EQ(back[i].values, rows[i].values);
  }
  std::stringstream ragged("0 1 1 2\n0 1 1\n");
  EXPECT_THROW(ParseEmbeddings(ragged), FormatError);
}

}  // namespace
}  // namespace cdfse::eval
