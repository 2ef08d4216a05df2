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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gtest/gtest.h"

#include "cdfse/common/errors.h"
#include "cdfse/frontend/corpus.h"
#include "cdfse/model/model.h"
#include "cdfse/nn/ops.h"
#include "grad_check.h"
#include "model_fixtures.h"

namespace cdfse::model {
namespace {

using nn::Context;
using nn::Graph;
using nn::Matrix;
using nn::Var;
using testing::NarrowConfig;
using testing::RandomMel;

std::span<const int> One(const int& n) { return std::span<const int>(&n, 1); }

TEST(ConfigTest, TextRoundTripAndErrors) {
  RunConfig c;
  c.model.ref.pool_stages = 6;
  c.model.backbone.mode = ConditioningMode::kCls;
  c.train.optimizer.epsilon = 1e-9;
  c.train.loss_weights.duration = 0.3;
  const std::string text = ConfigText(c);
  RunConfig back = ParseConfig(text);
  EXPECT_EQ(ConfigText(back), text);
  EXPECT_EQ(back.model.ref.factor(), 64);
  EXPECT_EQ(back.model.backbone.mode, ConditioningMode::kCls);
  EXPECT_EQ(back.train.loss_weights.duration, 0.3);

  auto message = [](const std::string& t) {
    try {
      ParseConfig(t);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("hidden=abc\n").find("hidden"), std::string::npos);
  EXPECT_NE(message("no_such_key=1\n").find("no_such_key"), std::string::npos);
  EXPECT_NE(message("downsample_factor=8x\n").find("downsample_factor"), std::string::npos);
  EXPECT_NE(message("downsample_factor=128\n").find("downsample_factor"), std::string::npos);
  EXPECT_NE(message("batch_size=0\n").find("batch_size"), std::string::npos);
  EXPECT_NE(message("mode=gst\n").find("mode"), std::string::npos);
  EXPECT_NE(message("w_mel=-1\n").find("w_mel"), std::string::npos);
  EXPECT_EQ(ParseConfig("# comment\n\n hidden = 32 # trailing\n").model.backbone.hidden, 32);
}

TEST(ConfigTest, EveryKeyIsEmitted) {
  const std::string text = ConfigText(RunConfig{});
  for (const std::string& key : ConfigKeys()) {
    EXPECT_NE(text.find(key + "="), std::string::npos) << key;
  }
}

class RefEncoderTest : public ::testing::Test {
 protected:
  std::mt19937_64 rng_{3};
};

TEST_F(RefEncoderTest, PrenetShapeAtFullWidth) {
  ModelConfig c = ModelConfig::Full();
  nn::ParamStore store;
  ReferenceEncoder enc(store, c, rng_);
  Graph g(false);
  Context ctx{g, true};
  const int t = 64;
  Var out = enc.Prenet(ctx, g.Constant(RandomMel(t, 80, rng_)), One(t));
  EXPECT_EQ(out.rows(), 64);
  EXPECT_EQ(out.cols(), 512);
  Var content = enc.ContentEncode(ctx, out, One(t));
  EXPECT_EQ(content.rows(), 64);
  EXPECT_EQ(content.cols(), 256);
  EXPECT_EQ(enc.PhonemeClassify(ctx, content).cols(), c.n_phonemes);
}

TEST_F(RefEncoderTest, PrenetRejectsSingleFrameInTraining) {
  nn::ParamStore store;
  ReferenceEncoder enc(store, NarrowConfig(), rng_);
  Graph g;
  Context train{g, true};
  const int t = 1;
  EXPECT_THROW(enc.Prenet(train, g.Constant(Matrix::Ones(1, 10)), One(t)), InvalidInput);
  Context eval{g, false};
  EXPECT_EQ(enc.Prenet(eval, g.Constant(Matrix::Ones(1, 10)), One(t)).rows(), 1);
  ReferenceEncoding r = enc.Encode(eval, Matrix::Ones(1, 10), One(t));
  EXPECT_EQ(r.frame_content.rows(), 1);
  EXPECT_EQ(r.local_lengths, nn::Lengths{1});
}

TEST_F(RefEncoderTest, ZeroInputZeroBiasesGiveZeroPrenet) {
  nn::ParamStore store;
  ReferenceEncoder enc(store, NarrowConfig(), rng_);
  Graph g;
  Context ctx{g, true};
  const int t = 12;
  Var out = enc.Prenet(ctx, g.Constant(Matrix::Zero(t, 10)), One(t));
  EXPECT_EQ(out.value().cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(RefEncoderTest, EvalModeIsDeterministic) {
  nn::ParamStore store;
  ReferenceEncoder enc(store, NarrowConfig(), rng_);
  const Matrix mel = RandomMel(40, 10, rng_);
  const int t = 40;
  auto run = [&] {
    Graph g(false);
    Context ctx{g, false};
    ReferenceEncoding r = enc.Encode(ctx, mel, One(t));
    return std::make_pair(Matrix(r.local_speaker.value()), Matrix(r.phoneme_logits.value()));
  };
  EXPECT_EQ(run(), run());
}

TEST_F(RefEncoderTest, PositionalEncodingBreaksPermutationEquivariance) {
  nn::ParamStore store;
  ModelConfig c = NarrowConfig();
  ReferenceEncoder enc(store, c, rng_);
  const int t = 9;
  const Matrix x = RandomMel(t, c.ref.prenet_channels, rng_);
  std::vector<int> perm(t);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng_);
  Matrix xp(t, x.cols());
  for (int i = 0; i < t; ++i) xp.row(i) = x.row(perm[i]);
  Graph g(false);
  Context ctx{g, false};
  const Matrix y = enc.ContentEncode(ctx, g.Constant(x), One(t)).value();
  const Matrix yp = enc.ContentEncode(ctx, g.Constant(xp), One(t)).value();
  double diff = 0;
  for (int i = 0; i < t; ++i) diff = std::max(diff, (yp.row(i) - y.row(perm[i])).norm());
  EXPECT_GT(diff, 1e-3);
}

TEST_F(RefEncoderTest, UntrainedPhonemeLossNearLogVocab) {
  frontend::SyntheticCorpusSpec spec;
  spec.utterances_per_speaker = 10;
  const auto corpus = frontend::GenerateSyntheticCorpus(spec);
  ModelConfig c = ModelConfig::Toy();
  nn::ParamStore store;
  ReferenceEncoder enc(store, c, rng_);
  double total = 0;
  for (const auto& r : corpus.records) {
    Graph g(false);
    Context ctx{g, true};
    const int t = r.num_frames();
    ReferenceEncoding e = enc.Encode(ctx, r.mel, One(t));
    total += nn::CrossEntropy(e.phoneme_logits, r.alignment.frame_tags).value()(0, 0);
  }
  const double mean = total / corpus.records.size();
  EXPECT_NEAR(mean, std::log(12.0), 0.1 * std::log(12.0));
}

TEST_F(RefEncoderTest, DownsampleExamples) {
  for (auto [t, stages, s] : {std::tuple{64, 4, 4}, {65, 4, 5}, {64, 0, 64}, {64, 6, 1},
                              {130, 6, 3}, {7, 2, 2}}) {
    nn::ParamStore store;
    ReferenceEncoder enc(store, NarrowConfig(stages), rng_);
    Graph g(false);
    Context ctx{g, false};
    ReferenceEncoding r = enc.Encode(ctx, RandomMel(t, 10, rng_), One(t));
    EXPECT_EQ(r.local_lengths, nn::Lengths{s}) << t << " " << stages;
    EXPECT_EQ(r.local_content.rows(), s);
    EXPECT_EQ(r.local_speaker.rows(), s);
  }
  nn::ParamStore store;
  ModelConfig bad = NarrowConfig();
  bad.ref.pool_stages = 7;
  EXPECT_THROW(ReferenceEncoder(store, bad, rng_), ConfigError);
  EXPECT_EQ(DownsampledLengths(std::vector<int>{64, 65, 1}, 4), (nn::Lengths{4, 5, 1}));
}

TEST_F(RefEncoderTest, FullWidthEncodeReference) {
  ModelConfig c = ModelConfig::Full();
  nn::ParamStore store;
  ReferenceEncoder enc(store, c, rng_);
  Graph g(false);
  Context ctx{g, false};
  const int t = 64;
  ReferenceEncoding r = enc.Encode(ctx, RandomMel(t, 80, rng_), One(t));
  EXPECT_EQ(r.local_content.rows(), 4);
  EXPECT_EQ(r.local_speaker.rows(), 4);
  EXPECT_EQ(r.speaker_vector.cols(), 256);
  const Matrix mean = r.local_speaker.value().colwise().mean();
  EXPECT_LT((mean - r.speaker_vector.value()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(r.speaker_logits.cols(), c.n_speakers);
}

// S = ceil(T / f), content and speaker rows agree, speaker entries inside
// (-1, 1). Batched so many lengths share one pass.
TEST_F(RefEncoderTest, LengthAndRangeLawsOverRandomLengths) {
  std::uniform_int_distribution<int> len(1, 512);
  int cases = 0;
  for (int stages : {0, 2, 4, 6}) {
    nn::ParamStore store;
    ReferenceEncoder enc(store, NarrowConfig(stages), rng_);
    for (int batch = 0; batch < 25; ++batch) {
      nn::Lengths lengths(10);
      for (int& t : lengths) t = len(rng_);
      Graph g(false);
      Context ctx{g, false};
      ReferenceEncoding r =
          enc.Encode(ctx, RandomMel(nn::TotalLength(lengths), 10, rng_), lengths);
      const int f = 1 << stages;
      for (size_t i = 0; i < lengths.size(); ++i) {
        ASSERT_EQ(r.local_lengths[i], (lengths[i] + f - 1) / f);
        ++cases;
      }
      ASSERT_EQ(r.local_content.rows(), r.local_speaker.rows());
      ASSERT_LT(r.local_speaker.value().cwiseAbs().maxCoeff(), 1.0);
    }
  }
  EXPECT_EQ(cases, 1000);
}

// Batched sequences are independent: packing never leaks across boundaries.
TEST_F(RefEncoderTest, PackedBatchMatchesSingles) {
  nn::ParamStore store;
  ReferenceEncoder enc(store, NarrowConfig(2), rng_);
  const Matrix a = RandomMel(13, 10, rng_);
  const Matrix b = RandomMel(6, 10, rng_);
  Matrix ab(19, 10);
  ab << a, b;
  Graph g(false);
  Context ctx{g, false};
  const int ta = 13, tb = 6;
  ReferenceEncoding r = enc.Encode(ctx, ab, std::vector<int>{13, 6});
  ReferenceEncoding ra = enc.Encode(ctx, a, One(ta));
  ReferenceEncoding rb = enc.Encode(ctx, b, One(tb));
  EXPECT_LT((r.local_speaker.value().topRows(4) - ra.local_speaker.value()).norm(), 1e-12);
  EXPECT_LT((r.local_speaker.value().bottomRows(2) - rb.local_speaker.value()).norm(), 1e-12);
  EXPECT_LT((r.speaker_vector.value().row(1) - rb.speaker_vector.value()).norm(), 1e-12);
}

bool AnyNonzero(nn::ParamStore& store, const std::string& prefix) {
  for (nn::Parameter* p : store.Trainable()) {
    if (p->name.rfind(prefix, 0) == 0 && p->grad.cwiseAbs().maxCoeff() > 0) return true;
  }
  return false;
}

bool AllZero(nn::ParamStore& store, const std::string& prefix) {
  for (nn::Parameter* p : store.Trainable()) {
    if (p->name.rfind(prefix, 0) == 0 && p->grad.cwiseAbs().maxCoeff() > 0) return false;
  }
  return true;
}

TEST_F(RefEncoderTest, GradientFlowOfClassifierLosses) {
  nn::ParamStore store;
  ReferenceEncoder enc(store, NarrowConfig(), rng_);
  const nn::Lengths lengths{20, 17};
  const Matrix mel = RandomMel(37, 10, rng_);
  std::vector<int> tags(37);
  for (int i = 0; i < 37; ++i) tags[i] = (i / 5) % 6;
  {
    store.ZeroGrad();
    Graph g;
    Context ctx{g, true};
    ReferenceEncoding r = enc.Encode(ctx, mel, lengths);
    g.Backward(nn::CrossEntropy(r.phoneme_logits, tags));
    EXPECT_TRUE(AnyNonzero(store, "ref.content.block"));
    EXPECT_TRUE(AnyNonzero(store, "ref.prenet"));
    EXPECT_TRUE(AllZero(store, "ref.speaker_downsample"));
  }
  {
    store.ZeroGrad();
    Graph g;
    Context ctx{g, true};
    ReferenceEncoding r = enc.Encode(ctx, mel, lengths);
    g.Backward(nn::CrossEntropy(r.speaker_logits, std::vector<int>{0, 2}));
    EXPECT_TRUE(AnyNonzero(store, "ref.speaker_downsample"));
    EXPECT_TRUE(AnyNonzero(store, "ref.prenet"));
    EXPECT_TRUE(AllZero(store, "ref.content"));
  }
}

class RefAttentionTest : public ::testing::Test {
 protected:
  RefAttentionTest() : config_(NarrowConfig()), attn_(store_, config_, rng_) {}

  std::mt19937_64 rng_{5};
  ModelConfig config_;
  nn::ParamStore store_;
  ReferenceAttention attn_;
};

TEST_F(RefAttentionTest, ShapesAndStochasticRows) {
  Graph g(false);
  Context ctx{g, false};
  const int l = 7, s = 4;
  Var q = g.Constant(RandomMel(l, 8, rng_));
  Var kc = g.Constant(RandomMel(s, 12, rng_));
  Var vs = g.Constant(RandomMel(s, 12, rng_).array().tanh().matrix());
  FineGrainedEmbedding e = attn_(ctx, q, One(l), kc, vs, One(s));
  EXPECT_EQ(e.rows.rows(), 7);
  EXPECT_EQ(e.rows.cols(), 12);
  ASSERT_EQ(e.weights.size(), 1u);
  EXPECT_EQ(e.weights[0].rows(), 7);
  EXPECT_EQ(e.weights[0].cols(), 4);
  const Matrix& v = vs.value();
  for (int i = 0; i < l; ++i) {
    EXPECT_NEAR(e.weights[0].row(i).sum(), 1.0, 1e-12);
    for (int d = 0; d < 12; ++d) {
      EXPECT_LE(e.rows.value()(i, d), v.col(d).maxCoeff() + 1e-12);
      EXPECT_GE(e.rows.value()(i, d), v.col(d).minCoeff() - 1e-12);
    }
  }
}

TEST_F(RefAttentionTest, SingleKeyCopiesValue) {
  Graph g(false);
  Context ctx{g, false};
  const int l = 5, s = 1;
  Var vs = g.Constant(RandomMel(1, 12, rng_));
  FineGrainedEmbedding e = attn_(ctx, g.Constant(RandomMel(l, 8, rng_)), One(l),
                                 g.Constant(RandomMel(1, 12, rng_)), vs, One(s));
  for (int i = 0; i < l; ++i) {
    EXPECT_LT((e.rows.value().row(i) - vs.value().row(0)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST_F(RefAttentionTest, EmptyReferenceRejected) {
  Graph g(false);
  Context ctx{g, false};
  const int l = 3, s = 0;
  EXPECT_THROW(attn_(ctx, g.Constant(RandomMel(l, 8, rng_)), One(l),
                     g.Constant(Matrix(0, 12)), g.Constant(Matrix(0, 12)), One(s)),
               InvalidInput);
}

TEST_F(RefAttentionTest, OutputLengthFollowsQueries) {
  std::uniform_int_distribution<int> len(1, 40);
  for (int trial = 0; trial < 50; ++trial) {
    const int l = len(rng_), s = len(rng_);
    Graph g(false);
    Context ctx{g, false};
    FineGrainedEmbedding e =
        attn_(ctx, g.Constant(RandomMel(l, 8, rng_)), One(l),
              g.Constant(RandomMel(s, 12, rng_)), g.Constant(RandomMel(s, 12, rng_)), One(s));
    ASSERT_EQ(e.rows.rows(), l);
  }
}

TEST_F(RefAttentionTest, JointKeyValuePermutation) {
  const int l = 6, s = 5;
  const Matrix q = RandomMel(l, 8, rng_);
  const Matrix k = RandomMel(s, 12, rng_);
  const Matrix v = RandomMel(s, 12, rng_);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  Matrix kp(s, 12), vp(s, 12);
  for (int i = 0; i < s; ++i) {
    kp.row(i) = k.row(perm[i]);
    vp.row(i) = v.row(perm[i]);
  }
  Graph g(false);
  Context ctx{g, false};
  FineGrainedEmbedding a =
      attn_(ctx, g.Constant(q), One(l), g.Constant(k), g.Constant(v), One(s));
  FineGrainedEmbedding b =
      attn_(ctx, g.Constant(q), One(l), g.Constant(kp), g.Constant(vp), One(s));
  EXPECT_LT((a.rows.value() - b.rows.value()).cwiseAbs().maxCoeff(), 1e-9);
  for (int j = 0; j < s; ++j) {
    EXPECT_LT((b.weights[0].col(j) - a.weights[0].col(perm[j])).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(RefAttentionTest, FiniteDifferenceGradient) {
  const nn::Lengths ql{3, 4}, sl{2, 3};
  std::mt19937_64 rng(9);
  const Matrix head = testing::RandomMatrix(7, 12, rng);
  std::vector<Matrix> inputs{RandomMel(7, 8, rng_), RandomMel(5, 12, rng_),
                             RandomMel(5, 12, rng_)};
  auto build = [&](Graph& g, const std::vector<Var>& in) {
    Context ctx{g, true};
    return testing::ProjectToScalar(attn_(ctx, in[0], ql, in[1], in[2], sl).rows, head);
  };
  EXPECT_LT(testing::CheckInputGradients(inputs, build), 1e-4);
  const Matrix q = inputs[0], k = inputs[1], v = inputs[2];
  auto loss = [&](bool backward) {
    Graph g(backward);
    Context ctx{g, true};
    Var out = testing::ProjectToScalar(
        attn_(ctx, g.Constant(q), ql, g.Constant(k), g.Constant(v), sl).rows, head);
    if (backward) g.Backward(out);
    return out.value()(0, 0);
  };
  EXPECT_LT(testing::CheckParamGradients(store_.Trainable(), loss), 1e-4);
}

class BackboneTest : public ::testing::Test {
 protected:
  BackboneTest() : config_(NarrowConfig()), backbone_(store_, config_, rng_) {}

  std::mt19937_64 rng_{11};
  ModelConfig config_;
  nn::ParamStore store_;
  Backbone backbone_;
};

TEST_F(BackboneTest, PhonemeEncodeShapeDeterminismAndVocab) {
  const std::vector<int> ids{0, 1, 2, 3, 4, 5, 1};
  const int l = 7;
  Graph g(false);
  Context ctx{g, false};
  Var a = backbone_.PhonemeEncode(ctx, ids, One(l));
  Var b = backbone_.PhonemeEncode(ctx, ids, One(l));
  EXPECT_EQ(a.rows(), 7);
  EXPECT_EQ(a.cols(), 8);
  EXPECT_EQ(a.value(), b.value());
  const std::vector<int> bad{0, 6};
  const int lb = 2;
  EXPECT_THROW(backbone_.PhonemeEncode(ctx, bad, One(lb)), InvalidInput);
  const std::vector<int> neg{-1};
  const int ln = 1;
  EXPECT_THROW(backbone_.PhonemeEncode(ctx, neg, One(ln)), InvalidInput);
}

TEST_F(BackboneTest, DistinctIdsGiveDistinctRows) {
  const std::vector<int> ids{0, 1, 2, 3, 4, 5};
  const int l = 6;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    nn::ParamStore store;
    Backbone bb(store, config_, rng);
    Graph g(false);
    Context ctx{g, false};
    const Matrix out = bb.PhonemeEncode(ctx, ids, One(l)).value();
    for (int i = 0; i < l; ++i) {
      for (int j = i + 1; j < l; ++j) ASSERT_GT((out.row(i) - out.row(j)).norm(), 1e-9);
    }
  }
}

TEST_F(BackboneTest, ConditioningLaws) {
  const int l = 7;
  Graph g(false);
  Context ctx{g, false};
  Var enc = g.Constant(RandomMel(l, 8, rng_));
  Var utt = g.Constant(RandomMel(1, 12, rng_));
  const Matrix cls =
      backbone_.Condition(ctx, enc, One(l), ConditioningMode::kCls, utt).value() - enc.value();
  for (int i = 1; i < l; ++i) EXPECT_LT((cls.row(i) - cls.row(0)).norm(), 1e-15);

  Var zero = g.Constant(Matrix::Zero(l, 12));
  EXPECT_EQ(backbone_.Condition(ctx, enc, One(l), ConditioningMode::kCdfse, zero).value(),
            enc.value());

  Var fgse = g.Constant(RandomMel(l, 12, rng_));
  const Matrix delta =
      backbone_.Condition(ctx, enc, One(l), ConditioningMode::kCdfse, fgse).value() -
      enc.value();
  for (int i = 1; i < l; ++i) EXPECT_GT((delta.row(i) - delta.row(0)).norm(), 1e-6);

  EXPECT_THROW(backbone_.Condition(ctx, enc, One(l), ConditioningMode::kCdfse,
                                   g.Constant(Matrix::Zero(l - 1, 12))),
               InvalidInput);
  EXPECT_THROW(backbone_.Condition(ctx, enc, One(l), ConditioningMode::kCls,
                                   g.Constant(Matrix::Zero(2, 12))),
               InvalidInput);
}

TEST_F(BackboneTest, DurationClampLaw) {
  Matrix p(4, 1);
  p << 0.0, std::log(3.0), -5.0, std::log(2.4);
  EXPECT_EQ(DurationsFromLog(p), (std::vector<int>{1, 2, 1, 1}));
  const int l = 5;
  Graph g(false);
  Context ctx{g, false};
  EXPECT_EQ(backbone_.PredictDurations(ctx, g.Constant(RandomMel(l, 8, rng_)), One(l)).rows(),
            5);
}

TEST_F(BackboneTest, LengthRegulation) {
  Graph g(false);
  const int l2 = 2;
  Var x = g.Constant(RandomMel(2, 8, rng_));
  nn::Lengths frames;
  Var up = backbone_.LengthRegulate(x, One(l2), std::vector<int>{2, 3}, &frames);
  EXPECT_EQ(frames, nn::Lengths{5});
  for (int i = 0; i < 5; ++i) EXPECT_EQ(up.value().row(i), x.value().row(i < 2 ? 0 : 1));
  const int l3 = 3;
  Var y = g.Constant(RandomMel(3, 8, rng_));
  EXPECT_EQ(backbone_.LengthRegulate(y, One(l3), std::vector<int>{1, 1, 1}, nullptr).value(),
            y.value());
  EXPECT_THROW(backbone_.LengthRegulate(y, One(l3), std::vector<int>{1, 0, 1}, nullptr),
               InvalidInput);
  EXPECT_THROW(backbone_.LengthRegulate(y, One(l3), std::vector<int>{1, 1}, nullptr),
               InvalidInput);
  std::uniform_int_distribution<int> d(1, 9);
  for (int trial = 0; trial < 100; ++trial) {
    nn::Lengths lengths{d(rng_), d(rng_)};
    std::vector<int> durs(lengths[0] + lengths[1]);
    for (int& v : durs) v = d(rng_);
    Var z = g.Constant(Matrix::Zero(durs.size(), 2));
    Var out = backbone_.LengthRegulate(z, lengths, durs, &frames);
    ASSERT_EQ(out.rows(), std::accumulate(durs.begin(), durs.end(), 0));
    ASSERT_EQ(frames[0] + frames[1], out.rows());
  }
}

TEST_F(BackboneTest, DecodeShapeAndDeterminism) {
  const int t = 30;
  const Matrix up = RandomMel(t, 8, rng_);
  Graph g(false);
  Context ctx{g, false};
  Var a = backbone_.DecodeMel(ctx, g.Constant(up), One(t));
  Var b = backbone_.DecodeMel(ctx, g.Constant(up), One(t));
  EXPECT_EQ(a.rows(), 30);
  EXPECT_EQ(a.cols(), 10);
  EXPECT_EQ(a.value(), b.value());
}

TEST(ModelTest, SynthesisConservesPredictedDurations) {
  std::mt19937_64 rng(1);
  for (ConditioningMode mode : {ConditioningMode::kCdfse, ConditioningMode::kCls}) {
    CdfseModel m(NarrowConfig(4, mode), 3);
    const std::vector<int> ids{1, 4, 2, 0};
    SynthesisResult r = m.Synthesize(ids, RandomMel(50, 10, rng));
    EXPECT_EQ(r.mel.rows(), std::accumulate(r.durations.begin(), r.durations.end(), 0));
    EXPECT_EQ(r.mel.cols(), 10);
    if (mode == ConditioningMode::kCdfse) {
      EXPECT_EQ(r.attention.rows(), 4);
      EXPECT_EQ(r.attention.cols(), 4);
    } else {
      EXPECT_EQ(r.attention.size(), 0);
      EXPECT_EQ(m.attention(), nullptr);
    }
  }
}

TEST(ModelTest, ClsIgnoresLocalContent) {
  std::mt19937_64 rng(2);
  CdfseModel m(NarrowConfig(4, ConditioningMode::kCls), 3);
  const Matrix mel = RandomMel(40, 10, rng);
  const std::vector<int> ids{1, 4, 2};
  const int t = 40, l = 3;
  Graph g(false);
  Context ctx{g, false};
  ReferenceEncoding ref = m.EncodeReference(ctx, mel, One(t));
  ModelOutput a = m.Generate(ctx, ref, ids, One(l));
  ref.local_content = g.Constant(Matrix::Zero(ref.local_content.rows(), ref.local_content.cols()));
  ModelOutput b = m.Generate(ctx, ref, ids, One(l));
  EXPECT_EQ(a.mel.value(), b.mel.value());
  EXPECT_EQ(a.durations, b.durations);
}

TEST(ModelTest, CdfseDependsOnLocalContent) {
  std::mt19937_64 rng(2);
  CdfseModel m(NarrowConfig(2), 3);
  const Matrix mel = RandomMel(40, 10, rng);
  const std::vector<int> ids{1, 4, 2};
  const int t = 40, l = 3;
  Graph g(false);
  Context ctx{g, false};
  ReferenceEncoding ref = m.EncodeReference(ctx, mel, One(t));
  ModelOutput a = m.Generate(ctx, ref, ids, One(l), std::vector<int>{2, 2, 2});
  ref.local_content = g.Constant(Matrix::Zero(ref.local_content.rows(), ref.local_content.cols()));
  ModelOutput b = m.Generate(ctx, ref, ids, One(l), std::vector<int>{2, 2, 2});
  EXPECT_GT((a.mel.value() - b.mel.value()).norm(), 1e-9);
}

// With one local embedding, attention selects it for every phoneme, which is
// exactly the cls conditioning with that row as the utterance vector.
TEST(ModelTest, SingleKeyCdfseEqualsCls) {
  std::mt19937_64 rng(4);
  CdfseModel m(NarrowConfig(6), 3);
  const int t = 50, l = 5;
  const std::vector<int> ids{0, 3, 1, 5, 2};
  Graph g(false);
  Context ctx{g, false};
  ReferenceEncoding ref = m.EncodeReference(ctx, RandomMel(t, 10, rng), One(t));
  ASSERT_EQ(ref.local_lengths, nn::Lengths{1});
  ModelOutput out = m.Generate(ctx, ref, ids, One(l));
  Var cls = m.backbone().Condition(ctx, out.encoded, One(l), ConditioningMode::kCls,
                                   ref.local_speaker);
  EXPECT_LT((out.conditioned.value() - cls.value()).cwiseAbs().maxCoeff(), 1e-6);
  Var cls_mean = m.backbone().Condition(ctx, out.encoded, One(l), ConditioningMode::kCls,
                                        ref.speaker_vector);
  EXPECT_LT((out.conditioned.value() - cls_mean.value()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ModelTest, ParameterCountMatchesAnalyticCount) {
  for (ConditioningMode mode : {ConditioningMode::kCdfse, ConditioningMode::kCls}) {
    for (ModelConfig c : {ModelConfig::Toy(), ModelConfig::Full(), NarrowConfig(6)}) {
      c.backbone.mode = mode;
      CdfseModel m(c, 1);
      EXPECT_EQ(m.params().TrainableCount(), AnalyticParameterCount(c));
    }
  }
  // Hand count of a toy-config piece: the 2-layer pre-net with batch norm.
  const ModelConfig toy = ModelConfig::Toy();
  CdfseModel m(toy, 1);
  int64_t prenet = 0;
  for (const nn::Parameter* p : m.params().All()) {
    if (p->trainable && p->name.rfind("ref.prenet", 0) == 0) prenet += p->numel();
  }
  EXPECT_EQ(prenet, (5 * 80 * 64 + 64) + 2 * 64 + (5 * 64 * 64 + 64) + 2 * 64);
}

// End-to-end central differences through every parameter of a hidden=8
// model, using the full training loss.
class EndToEndGradientTest : public ::testing::TestWithParam<ConditioningMode> {};

TEST_P(EndToEndGradientTest, AllParametersMatchFiniteDifferences) {
  const ModelConfig c = testing::GradCheckConfig(GetParam());
  ASSERT_EQ(c.backbone.hidden, 8);
  CdfseModel m(c, 21);
  std::mt19937_64 rng(8);
  const Matrix mel = RandomMel(6, c.n_mels, rng);
  const Matrix target = RandomMel(6, c.n_mels, rng);
  const std::vector<int> ids{2, 0, 3};
  const std::vector<int> durs{2, 1, 3};
  const std::vector<int> tags{2, 2, 0, 3, 3, 3};
  const int t = 6, l = 3;
  auto loss = [&](bool backward) {
    Graph g(backward);
    Context ctx{g, true};
    ModelOutput out = m.Forward(ctx, mel, One(t), ids, One(l), durs);
    Var total = nn::WeightedSum(
        {nn::L1Loss(out.mel, target), nn::MseLoss(out.log_durations, LogDurationTargets(durs)),
         nn::CrossEntropy(out.ref.phoneme_logits, tags),
         nn::CrossEntropy(out.ref.speaker_logits, std::vector<int>{1})},
        std::vector<double>{1.0, 0.1, 0.1, 0.1});
    if (backward) g.Backward(total);
    return total.value()(0, 0);
  };
  std::vector<std::string> report;
  const double err =
      testing::CheckParamGradients(m.params().Trainable(), loss, 1e-5, &report, 1e-3, 1e-6);
  for (const std::string& line : report) ADD_FAILURE() << line;
  EXPECT_LT(err, 1e-3);
  // Softmax is shift-invariant along keys, so self-attention key biases get
  // no gradient at all.
  loss(true);
  for (nn::Parameter* p : m.params().Trainable()) {
    if (p->name.ends_with("attn.key.bias")) EXPECT_LT(p->grad.norm(), 1e-12) << p->name;
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, EndToEndGradientTest,
                         ::testing::Values(ConditioningMode::kCdfse, ConditioningMode::kCls),
                         [](const auto& info) { return ModeName(info.param); });

}  // namespace
}  // namespace cdfse::model
