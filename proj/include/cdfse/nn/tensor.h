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

#ifndef CDFSE_NN_TENSOR_H_
#define CDFSE_NN_TENSOR_H_

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cdfse::nn {

// All activations are 2-D: rows are time steps (or phonemes), columns are
// channels. Several sequences of different lengths are packed row-wise and
// described by a `Lengths` list.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Lengths = std::vector<int>;

int TotalLength(std::span<const int> lengths);
std::vector<int> Offsets(std::span<const int> lengths);

// A named trainable (or buffer) tensor. `shape` is the logical shape; the
// storage is a matrix whose columns are the last extent and whose rows are the
// product of the leading extents, e.g. a K x Cin x Cout conv kernel is stored
// as (K*Cin) x Cout.
struct Parameter {
  std::string name;
  std::vector<int> shape;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  int64_t numel() const { return value.size(); }
};

// Owns parameters at stable addresses. Names are unique.
class ParamStore {
 public:
  Parameter& Add(const std::string& name, std::vector<int> shape,
                 bool trainable = true);
  Parameter* Find(const std::string& name);
  const Parameter* Find(const std::string& name) const;

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  std::vector<Parameter*> Trainable();

  int64_t TrainableCount() const;
  void ZeroGrad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Initializers. All take an explicit engine so model construction is
// reproducible from a seed.
void InitUniform(Parameter& p, double bound, std::mt19937_64& rng);
void InitXavier(Parameter& p, int fan_in, int fan_out, std::mt19937_64& rng,
                double gain = 1.0);
void InitNormal(Parameter& p, double stddev, std::mt19937_64& rng);
void InitConstant(Parameter& p, double value);

}  // namespace cdfse::nn

#endif  // CDFSE_NN_TENSOR_H_
