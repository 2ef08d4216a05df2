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

#include "cdfse/nn/tensor.h"

#include <cmath>
#include <numeric>

#include "cdfse/common/errors.h"

namespace cdfse::nn {

int TotalLength(std::span<const int> lengths) {
  return std::accumulate(lengths.begin(), lengths.end(), 0);
}

std::vector<int> Offsets(std::span<const int> lengths) {
  std::vector<int> out(lengths.size() + 1, 0);
  for (size_t i = 0; i < lengths.size(); ++i) out[i + 1] = out[i] + lengths[i];
  return out;
}

Parameter& ParamStore::Add(const std::string& name, std::vector<int> shape,
                           bool trainable) {
  if (Find(name) != nullptr) {
    throw ConfigError("duplicate parameter name: " + name);
  }
  if (shape.empty()) throw ConfigError("parameter needs a shape: " + name);
  int64_t rows = 1;
  for (size_t i = 0; i + 1 < shape.size(); ++i) rows *= shape[i];
  const int cols = shape.back();
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->shape = std::move(shape);
  p->value = Matrix::Zero(rows, cols);
  p->grad = Matrix::Zero(rows, cols);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParamStore::Find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParamStore::Find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

std::vector<Parameter*> ParamStore::All() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::All() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParamStore::Trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->trainable) out.push_back(p.get());
  }
  return out;
}

int64_t ParamStore::TrainableCount() const {
  int64_t n = 0;
  for (const auto& p : params_) {
    if (p->trainable) n += p->numel();
  }
  return n;
}

void ParamStore::ZeroGrad() {
  for (auto& p : params_) p->grad.setZero();
}

void InitUniform(Parameter& p, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
}

void InitXavier(Parameter& p, int fan_in, int fan_out, std::mt19937_64& rng,
                double gain) {
  InitUniform(p, gain * std::sqrt(6.0 / (fan_in + fan_out)), rng);
}

void InitNormal(Parameter& p, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
}

void InitConstant(Parameter& p, double value) { p.value.setConstant(value); }

}  // namespace cdfse::nn
