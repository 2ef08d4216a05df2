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

#include "cdfse/eval/ablation.h"

#include <cstdio>
#include <exception>

#include "cdfse/common/errors.h"
#include "cdfse/eval/metrics.h"

namespace cdfse::eval {

void ValidateFactors(std::span<const int> factors) {
  if (factors.empty()) throw ConfigError("factors: at least one factor is required");
  for (int f : factors) {
    if (f != 1 && f != 4 && f != 16 && f != 64) {
      throw ConfigError("factors: expected 1, 4, 16 or 64, got " + std::to_string(f));
    }
  }
}

namespace {

int PoolStages(int factor) {
  int stages = 0;
  while ((1 << stages) < factor) ++stages;
  return stages;
}

}  // namespace

std::vector<AblationRow> RunAblation(
    const model::RunConfig& base, const frontend::CorpusSplit& split,
    std::span<const int> factors,
    const std::function<void(int factor, const train::StepRecord&)>& on_step) {
  ValidateFactors(factors);
  if (split.train.empty() || split.heldout.empty()) {
    throw InvalidInput("ablation needs non-empty training and held-out sets");
  }
  std::vector<AblationRow> rows;
  for (int factor : factors) {
    AblationRow row;
    row.factor = factor;
    try {
      model::RunConfig config = base;
      config.model.backbone.mode = model::ConditioningMode::kCdfse;
      config.model.ref.pool_stages = PoolStages(factor);
      train::Trainer trainer(config, split.train);
      trainer.Run([&](const train::StepRecord& r) {
        if (on_step) on_step(factor, r);
      });
      const EvalReport rep = Evaluate(trainer.model(), split.heldout);
      row.cosine_similarity = rep.cosine_similarity;
      row.duration_mae = rep.duration_mae;
      row.phoneme_accuracy = rep.phoneme_accuracy;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string FormatAblationReport(std::span<const AblationRow> rows, uint64_t seed,
                                 int heldout_utterances) {
  std::string out;
  out += "# speaker similarity: cosine between this model's own utterance speaker vectors\n";
  out += "# of synthesized and ground-truth mels (no external verification system)\n";
  out += "# ground truth: held-out synthetic split of the training speakers, " +
         std::to_string(heldout_utterances) + " utterances\n";
  out += "# seed " + std::to_string(seed) + "\n";
  out += "factor cosine_similarity duration_mae phoneme_acc\n";
  char buf[160];
  for (const AblationRow& r : rows) {
    if (r.ok) {
      std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f\n", r.factor, r.cosine_similarity,
                    r.duration_mae, r.phoneme_accuracy);
      out += buf;
    } else {
      out += std::to_string(r.factor) + " failed: " + r.error + "\n";
    }
  }
  return out;
}

}  // namespace cdfse::eval
