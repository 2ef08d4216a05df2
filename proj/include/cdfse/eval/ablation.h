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

#ifndef CDFSE_EVAL_ABLATION_H_
#define CDFSE_EVAL_ABLATION_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cdfse/frontend/corpus.h"
#include "cdfse/model/config.h"
#include "cdfse/train/trainer.h"

namespace cdfse::eval {

struct AblationRow {
  int factor = 0;
  bool ok = false;
  std::string error;  // set when !ok
  double cosine_similarity = 0;
  double duration_mae = 0;
  double phoneme_accuracy = 0;
};

// Throws ConfigError unless every factor is one of 1, 4, 16, 64 and the list
// is non-empty.
void ValidateFactors(std::span<const int> factors);

// Trains one cdfse model per factor on `split.train` with the shared seed in
// `base`, then evaluates on `split.heldout`. A failing run is recorded, not
// rethrown.
std::vector<AblationRow> RunAblation(
    const model::RunConfig& base, const frontend::CorpusSplit& split,
    std::span<const int> factors,
    const std::function<void(int factor, const train::StepRecord&)>& on_step = {});

// Text table; the header records the speaker-vector metric and the held-out
// split standing in for unseen-speaker recordings.
std::string FormatAblationReport(std::span<const AblationRow> rows, uint64_t seed,
                                 int heldout_utterances);

}  // namespace cdfse::eval

#endif  // CDFSE_EVAL_ABLATION_H_
