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

#ifndef CDFSE_TRAIN_TRAINER_H_
#define CDFSE_TRAIN_TRAINER_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cdfse/frontend/corpus.h"
#include "cdfse/model/config.h"
#include "cdfse/model/model.h"
#include "cdfse/nn/optimizer.h"

namespace cdfse::train {

struct LossBundle {
  double mel = 0;
  double duration = 0;
  double phoneme_ce = 0;
  double speaker_ce = 0;
  double total = 0;
};

// One packed training batch. The reference is the phoneme-shuffled target.
struct TrainingBatch {
  nn::Matrix reference;             // sum(T) x n_mels, shuffled
  std::vector<int> reference_tags;  // shuffled frame tags
  nn::Matrix target;                // sum(T) x n_mels, original order
  nn::Lengths frame_lengths;
  std::vector<int> phonemes;
  nn::Lengths phoneme_lengths;
  std::vector<int> durations;
  std::vector<int> speakers;
};

// Packs `records[indices]`, shuffling every reference by phoneme with `rng`.
// Throws UsageError for an empty selection.
TrainingBatch MakeBatch(std::span<const frontend::UtteranceRecord> records,
                        std::span<const int> indices, std::mt19937_64& rng);

// Forward pass plus weighted losses with teacher-forced durations. Returns
// the scalar to differentiate in `total`.
LossBundle ComputeLosses(const model::CdfseModel& model, nn::Context& ctx,
                         const TrainingBatch& batch, const model::LossWeights& weights,
                         nn::Var* total);

// Per-step generator derived from (seed, step) so any step can be replayed.
std::mt19937_64 StepRng(uint64_t seed, int64_t step);

struct StepRecord {
  int64_t step = 0;
  LossBundle loss;
  double lr = 0;
};

// `step total mel dur pce sce lr`
std::string FormatLogLine(const StepRecord& record);
// Inverse of FormatLogLine; throws FormatError.
StepRecord ParseLogLine(const std::string& line);

class Trainer {
 public:
  Trainer(const model::RunConfig& config, std::vector<frontend::UtteranceRecord> corpus);
  // Continues from a checkpoint written by Save.
  static std::unique_ptr<Trainer> Resume(const std::string& checkpoint_path,
                                         std::vector<frontend::UtteranceRecord> corpus);

  // Runs step() + 1.
  StepRecord Step();
  // Steps until `max_steps`; `on_step` sees every record, `checkpoint_path`
  // (if not empty) receives periodic and final checkpoints.
  void Run(const std::function<void(const StepRecord&)>& on_step = {},
           const std::string& checkpoint_path = "");
  void Save(const std::string& path) const;
  // Extends or shortens the run, e.g. after Resume. Throws ConfigError if negative.
  void set_max_steps(int max_steps);

  int64_t step() const { return step_; }
  const model::RunConfig& config() const { return config_; }
  model::CdfseModel& model() { return *model_; }
  const model::CdfseModel& model() const { return *model_; }
  const nn::Adam& optimizer() const { return *optimizer_; }
  // The batch used by the most recent step.
  const TrainingBatch& last_batch() const { return last_batch_; }

 private:
  Trainer(const model::RunConfig& config, std::vector<frontend::UtteranceRecord> corpus,
          std::unique_ptr<model::CdfseModel> model);

  model::RunConfig config_;
  std::vector<frontend::UtteranceRecord> corpus_;
  std::unique_ptr<model::CdfseModel> model_;
  std::unique_ptr<nn::Adam> optimizer_;
  int64_t step_ = 0;
  TrainingBatch last_batch_;
};

}  // namespace cdfse::train

#endif  // CDFSE_TRAIN_TRAINER_H_
