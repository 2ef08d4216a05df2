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

#ifndef CDFSE_NN_LAYERS_H_
#define CDFSE_NN_LAYERS_H_

#include <random>
#include <span>
#include <string>

#include "cdfse/nn/graph.h"
#include "cdfse/nn/ops.h"
#include "cdfse/nn/tensor.h"

namespace cdfse::nn {

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// Forward-pass context shared by every layer call.
struct Context {
  Graph& graph;
  bool training;
};

class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(ParamStore& store, const std::string& name, int in_dim, int out_dim,
              std::mt19937_64& rng, bool with_bias = true, double gain = 1.0);

  Var operator()(Context& ctx, Var x) const;
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  Parameter& weight() const { return *weight_; }
  Parameter* bias() const { return bias_; }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
  int in_dim_ = 0;
  int out_dim_ = 0;
};

class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(ParamStore& store, const std::string& name, int in_channels,
              int out_channels, int kernel_size, std::mt19937_64& rng,
              double gain = 1.0);

  Var operator()(Context& ctx, Var x, std::span<const int> lengths) const;
  Parameter& kernel() const { return *kernel_; }
  Parameter& bias() const { return *bias_; }
  int kernel_size() const { return kernel_size_; }

 private:
  Parameter* kernel_ = nullptr;
  Parameter* bias_ = nullptr;
  int kernel_size_ = 1;
};

// Per-channel batch normalization. Running statistics are stored as
// non-trainable parameters so they travel with checkpoints.
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  BatchNormLayer(ParamStore& store, const std::string& name, int channels);

  Var operator()(Context& ctx, Var x) const;
  Parameter& running_mean() const { return *running_mean_; }
  Parameter& running_var() const { return *running_var_; }

 private:
  Parameter* gamma_ = nullptr;
  Parameter* beta_ = nullptr;
  Parameter* running_mean_ = nullptr;
  Parameter* running_var_ = nullptr;
};

class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  LayerNormLayer(ParamStore& store, const std::string& name, int dim);

  Var operator()(Context& ctx, Var x) const;

 private:
  Parameter* gamma_ = nullptr;
  Parameter* beta_ = nullptr;
};

struct FftBlockConfig {
  int dim = 256;
  int heads = 2;
  int ff_filter = 1024;
  int ff_kernel1 = 9;
  int ff_kernel2 = 1;
};

// Feed-forward Transformer block: multi-head self-attention and a two-layer
// convolutional feed-forward network, each wrapped as LayerNorm(x + f(x)).
// Self-attention never crosses sequence boundaries.
class FftBlock {
 public:
  FftBlock() = default;
  FftBlock(ParamStore& store, const std::string& name, const FftBlockConfig& config,
           std::mt19937_64& rng);

  Var operator()(Context& ctx, Var x, std::span<const int> lengths) const;

 private:
  FftBlockConfig config_;
  LinearLayer query_, key_, value_, output_;
  LayerNormLayer attn_norm_;
  Conv1dLayer ff1_, ff2_;
  LayerNormLayer ff_norm_;
};

}  // namespace cdfse::nn

#endif  // CDFSE_NN_LAYERS_H_
