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

#ifndef CDFSE_NN_OPTIMIZER_H_
#define CDFSE_NN_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "cdfse/nn/tensor.h"

namespace cdfse::nn {

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  int warmup_steps = 4000;
  double base_scale = 0.05;

  // Throws ConfigError unless 0 < beta1 < beta2 < 1, epsilon > 0, warmup > 0.
  void Validate() const;
};

// base_scale * min(step^-0.5, step * warmup^-1.5); step >= 1.
double LearningRate(const OptimizerConfig& config, int64_t step);

struct OptimizerState {
  int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// Bias-corrected Adam with the warm-up schedule above.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, OptimizerConfig config);

  // Applies one update using the gradients currently stored in the
  // parameters. `step` is 1-based and must be positive. Returns the learning
  // rate that was used.
  double Step(int64_t step);

  const OptimizerConfig& config() const { return config_; }
  const std::vector<Parameter*>& params() const { return params_; }
  OptimizerState& state() { return state_; }
  const OptimizerState& state() const { return state_; }

 private:
  std::vector<Parameter*> params_;
  OptimizerConfig config_;
  OptimizerState state_;
};

}  // namespace cdfse::nn

#endif  // CDFSE_NN_OPTIMIZER_H_
