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

#include "cdfse/train/trainer.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "cdfse/common/errors.h"
#include "cdfse/frontend/shuffle.h"
#include "cdfse/nn/ops.h"
#include "cdfse/train/checkpoint.h"

namespace cdfse::train {

TrainingBatch MakeBatch(std::span<const frontend::UtteranceRecord> records,
                        std::span<const int> indices, std::mt19937_64& rng) {
  if (indices.empty()) throw UsageError("training_step: empty batch");
  TrainingBatch b;
  int frames = 0;
  for (int i : indices) frames += records[i].num_frames();
  const int n_mels = static_cast<int>(records[indices[0]].mel.cols());
  b.reference.resize(frames, n_mels);
  b.target.resize(frames, n_mels);
  int row = 0;
  for (int i : indices) {
    const frontend::UtteranceRecord& r = records[i];
    frontend::ShuffledReference shuffled = frontend::ShuffleByPhoneme(r.mel, r.alignment, rng);
    b.reference.middleRows(row, r.num_frames()) = shuffled.mel;
    b.target.middleRows(row, r.num_frames()) = r.mel;
    b.reference_tags.insert(b.reference_tags.end(), shuffled.frame_tags.begin(),
                            shuffled.frame_tags.end());
    b.frame_lengths.push_back(r.num_frames());
    b.phonemes.insert(b.phonemes.end(), r.phonemes.begin(), r.phonemes.end());
    b.phoneme_lengths.push_back(static_cast<int>(r.phonemes.size()));
    b.durations.insert(b.durations.end(), r.durations.begin(), r.durations.end());
    b.speakers.push_back(r.speaker_id);
    row += r.num_frames();
  }
  return b;
}

LossBundle ComputeLosses(const model::CdfseModel& model, nn::Context& ctx,
                         const TrainingBatch& batch, const model::LossWeights& weights,
                         nn::Var* total) {
  model::ModelOutput out = model.Forward(ctx, batch.reference, batch.frame_lengths,
                                         batch.phonemes, batch.phoneme_lengths, batch.durations);
  nn::Var mel = nn::L1Loss(out.mel, batch.target);
  nn::Var dur = nn::MseLoss(out.log_durations, model::LogDurationTargets(batch.durations));
  nn::Var pce = nn::CrossEntropy(out.ref.phoneme_logits, batch.reference_tags);
  nn::Var sce = nn::CrossEntropy(out.ref.speaker_logits, batch.speakers);
  const double w[4] = {weights.mel, weights.duration, weights.phoneme_ce, weights.speaker_ce};
  nn::Var sum = nn::WeightedSum({mel, dur, pce, sce}, w);
  if (total != nullptr) *total = sum;
  LossBundle l;
  l.mel = mel.value()(0, 0);
  l.duration = dur.value()(0, 0);
  l.phoneme_ce = pce.value()(0, 0);
  l.speaker_ce = sce.value()(0, 0);
  l.total = sum.value()(0, 0);
  return l;
}

std::mt19937_64 StepRng(uint64_t seed, int64_t step) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(step), static_cast<uint32_t>(step >> 32)};
  return std::mt19937_64(seq);
}

std::string FormatLogLine(const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld %.9g %.9g %.9g %.9g %.9g %.9g",
                static_cast<long long>(r.step), r.loss.total, r.loss.mel, r.loss.duration,
                r.loss.phoneme_ce, r.loss.speaker_ce, r.lr);
  return buf;
}

StepRecord ParseLogLine(const std::string& line) {
  std::istringstream in(line);
  StepRecord r;
  in >> r.step >> r.loss.total >> r.loss.mel >> r.loss.duration >> r.loss.phoneme_ce >>
      r.loss.speaker_ce >> r.lr;
  std::string rest;
  if (in.fail() || (in >> rest)) throw FormatError("malformed training log line: " + line);
  return r;
}

Trainer::Trainer(const model::RunConfig& config, std::vector<frontend::UtteranceRecord> corpus)
    : Trainer(config, std::move(corpus),
              std::make_unique<model::CdfseModel>(config.model, config.train.seed)) {}

Trainer::Trainer(const model::RunConfig& config, std::vector<frontend::UtteranceRecord> corpus,
                 std::unique_ptr<model::CdfseModel> model)
    : config_(config), corpus_(std::move(corpus)), model_(std::move(model)) {
  config_.Validate();
  if (corpus_.empty()) throw InvalidInput("training corpus is empty");
  for (const auto& r : corpus_) {
    r.Validate();
    if (r.mel.cols() != config_.model.n_mels) {
      throw InvalidInput(r.id + ": mel width does not match n_mels");
    }
    if (r.speaker_id < 0 || r.speaker_id >= config_.model.n_speakers) {
      throw InvalidInput(r.id + ": speaker id outside n_speakers");
    }
  }
  optimizer_ = std::make_unique<nn::Adam>(model_->params().Trainable(), config_.train.optimizer);
}

std::unique_ptr<Trainer> Trainer::Resume(const std::string& checkpoint_path,
                                         std::vector<frontend::UtteranceRecord> corpus) {
  Checkpoint c = ReadCheckpoint(checkpoint_path);
  std::unique_ptr<Trainer> t(new Trainer(c.config, std::move(corpus), RestoreModel(c)));
  RestoreOptimizer(c, *t->optimizer_);
  t->step_ = c.step;
  return t;
}

StepRecord Trainer::Step() {
  const int64_t step = step_ + 1;
  std::mt19937_64 rng = StepRng(config_.train.seed, step);
  std::vector<int> all(corpus_.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> chosen;
  const size_t n = std::min<size_t>(config_.train.batch_size, all.size());
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), n, rng);
  last_batch_ = MakeBatch(corpus_, chosen, rng);

  model_->params().ZeroGrad();
  nn::Graph graph;
  nn::Context ctx{graph, true};
  nn::Var total;
  StepRecord rec;
  rec.step = step;
  rec.loss = ComputeLosses(*model_, ctx, last_batch_, config_.train.loss_weights, &total);
  graph.Backward(total);
  rec.lr = optimizer_->Step(step);
  step_ = step;
  return rec;
}

void Trainer::Run(const std::function<void(const StepRecord&)>& on_step,
                  const std::string& checkpoint_path) {
  const int every = config_.train.checkpoint_every;
  while (step_ < config_.train.max_steps) {
    StepRecord rec = Step();
    if (on_step) on_step(rec);
    if (!checkpoint_path.empty() && every > 0 && step_ % every == 0) Save(checkpoint_path);
  }
  if (!checkpoint_path.empty()) Save(checkpoint_path);
}

void Trainer::set_max_steps(int max_steps) {
  if (max_steps < 0) throw ConfigError("max_steps: must be non-negative");
  config_.train.max_steps = max_steps;
}

void Trainer::Save(const std::string& path) const {
  WriteCheckpoint(path, CaptureCheckpoint(config_, *model_, optimizer_.get(), step_));
}

}  // namespace cdfse::train
