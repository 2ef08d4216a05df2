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

#ifndef CDFSE_TRAIN_CHECKPOINT_H_
#define CDFSE_TRAIN_CHECKPOINT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cdfse/model/config.h"
#include "cdfse/model/model.h"
#include "cdfse/nn/optimizer.h"

namespace cdfse::train {

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  nn::Matrix value;
};

// Binary container: "CKPT", u32 version, config text, training step and a
// table of named f64 tensors (model parameters, batch-norm buffers and, when
// present, the optimizer moments as "adam.m/<name>" and "adam.v/<name>").
struct Checkpoint {
  model::RunConfig config;
  int64_t step = 0;
  std::vector<NamedTensor> tensors;

  const NamedTensor* Find(const std::string& name) const;
};

inline constexpr uint32_t kCheckpointVersion = 1;

Checkpoint CaptureCheckpoint(const model::RunConfig& config, const model::CdfseModel& model,
                             const nn::Adam* optimizer, int64_t step);

// Throws FormatError on I/O failure, bad magic or unknown version.
void WriteCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint ReadCheckpoint(const std::string& path);

// Builds a model from the stored config and copies every parameter. Throws
// ConfigError when `expected_mode` disagrees with the stored mode and
// FormatError when the tensor table does not match the architecture.
std::unique_ptr<model::CdfseModel> RestoreModel(
    const Checkpoint& checkpoint,
    std::optional<model::ConditioningMode> expected_mode = std::nullopt);
// Copies the stored moments into `optimizer` (whose parameters must belong to
// a model restored from the same checkpoint).
void RestoreOptimizer(const Checkpoint& checkpoint, nn::Adam& optimizer);

}  // namespace cdfse::train

#endif  // CDFSE_TRAIN_CHECKPOINT_H_
