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

#include "cdfse/nn/optimizer.h"

#include <algorithm>
#include <cmath>

#include "cdfse/common/errors.h"

namespace cdfse::nn {

void OptimizerConfig::Validate() const {
  if (!(beta1 > 0.0 && beta1 < beta2 && beta2 < 1.0)) {
    throw ConfigError("optimizer: need 0 < beta1 < beta2 < 1");
  }
  if (!(epsilon > 0.0)) throw ConfigError("optimizer: epsilon must be positive");
  if (warmup_steps < 1) throw ConfigError("optimizer: warmup_steps must be positive");
  if (!(base_scale > 0.0)) throw ConfigError("optimizer: base_scale must be positive");
}

double LearningRate(const OptimizerConfig& config, int64_t step) {
  if (step < 1) throw UsageError("learning rate schedule starts at step 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(config.warmup_steps);
  return config.base_scale * std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

Adam::Adam(std::vector<Parameter*> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  config_.Validate();
  for (const Parameter* p : params_) {
    state_.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    state_.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

double Adam::Step(int64_t step) {
  if (step < 1) throw UsageError("adam_step: step must be >= 1");
  const double lr = LearningRate(config_, step);
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Matrix& m = state_.first_moment[i];
    Matrix& v = state_.second_moment[i];
    m = b1 * m + (1.0 - b1) * p.grad;
    v = b2 * v + (1.0 - b2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
  }
  state_.step = step;
  return lr;
}

}  // namespace cdfse::nn
