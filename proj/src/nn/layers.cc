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

#include "cdfse/nn/layers.h"

#include <cmath>

#include "cdfse/common/errors.h"

namespace cdfse::nn {

LinearLayer::LinearLayer(ParamStore& store, const std::string& name, int in_dim,
                         int out_dim, std::mt19937_64& rng, bool with_bias,
                         double gain)
    : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim < 1 || out_dim < 1) throw ConfigError(name + ": empty linear layer");
  weight_ = &store.Add(name + ".weight", {in_dim, out_dim});
  InitXavier(*weight_, in_dim, out_dim, rng, gain);
  if (with_bias) bias_ = &store.Add(name + ".bias", {1, out_dim});
}

Var LinearLayer::operator()(Context& ctx, Var x) const {
  Var b = bias_ != nullptr ? ctx.graph.Param(*bias_) : Var();
  return Linear(x, ctx.graph.Param(*weight_), b);
}

Conv1dLayer::Conv1dLayer(ParamStore& store, const std::string& name,
                         int in_channels, int out_channels, int kernel_size,
                         std::mt19937_64& rng, double gain)
    : kernel_size_(kernel_size) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ConfigError(name + ": conv1d kernel size must be odd, got " +
                      std::to_string(kernel_size));
  }
  kernel_ = &store.Add(name + ".kernel", {kernel_size, in_channels, out_channels});
  InitXavier(*kernel_, kernel_size * in_channels, out_channels, rng, gain);
  bias_ = &store.Add(name + ".bias", {1, out_channels});
}

Var Conv1dLayer::operator()(Context& ctx, Var x, std::span<const int> lengths) const {
  return Conv1d(x, ctx.graph.Param(*kernel_), ctx.graph.Param(*bias_),
                kernel_size_, lengths);
}

BatchNormLayer::BatchNormLayer(ParamStore& store, const std::string& name,
                               int channels) {
  gamma_ = &store.Add(name + ".gamma", {1, channels});
  beta_ = &store.Add(name + ".beta", {1, channels});
  running_mean_ = &store.Add(name + ".running_mean", {1, channels}, false);
  running_var_ = &store.Add(name + ".running_var", {1, channels}, false);
  InitConstant(*gamma_, 1.0);
  InitConstant(*running_var_, 1.0);
}

Var BatchNormLayer::operator()(Context& ctx, Var x) const {
  Var gamma = ctx.graph.Param(*gamma_);
  Var beta = ctx.graph.Param(*beta_);
  if (!ctx.training) {
    return BatchNormEval(x, gamma, beta, running_mean_->value.row(0),
                         running_var_->value.row(0), kNormEpsilon);
  }
  BatchStats stats;
  Var out = BatchNormTrain(x, gamma, beta, kNormEpsilon, &stats);
  const double n = static_cast<double>(x.rows());
  const RowVector unbiased = stats.var * (n / (n - 1.0));
  running_mean_->value = (1.0 - kBatchNormMomentum) * running_mean_->value +
                         kBatchNormMomentum * stats.mean;
  running_var_->value = (1.0 - kBatchNormMomentum) * running_var_->value +
                        kBatchNormMomentum * unbiased;
  return out;
}

LayerNormLayer::LayerNormLayer(ParamStore& store, const std::string& name, int dim) {
  if (dim < 2) throw ConfigError(name + ": layernorm needs D >= 2");
  gamma_ = &store.Add(name + ".gamma", {1, dim});
  beta_ = &store.Add(name + ".beta", {1, dim});
  InitConstant(*gamma_, 1.0);
}

Var LayerNormLayer::operator()(Context& ctx, Var x) const {
  return LayerNorm(x, ctx.graph.Param(*gamma_), ctx.graph.Param(*beta_),
                   kNormEpsilon);
}

FftBlock::FftBlock(ParamStore& store, const std::string& name,
                   const FftBlockConfig& config, std::mt19937_64& rng)
    : config_(config) {
  if (config.heads < 1 || config.dim % config.heads != 0) {
    throw ConfigError(name + ": dim " + std::to_string(config.dim) +
                      " not divisible by " + std::to_string(config.heads) + " heads");
  }
  query_ = LinearLayer(store, name + ".attn.query", config.dim, config.dim, rng);
  key_ = LinearLayer(store, name + ".attn.key", config.dim, config.dim, rng);
  value_ = LinearLayer(store, name + ".attn.value", config.dim, config.dim, rng);
  output_ = LinearLayer(store, name + ".attn.output", config.dim, config.dim, rng);
  attn_norm_ = LayerNormLayer(store, name + ".attn.norm", config.dim);
  ff1_ = Conv1dLayer(store, name + ".ff.conv1", config.dim, config.ff_filter,
                     config.ff_kernel1, rng);
  ff2_ = Conv1dLayer(store, name + ".ff.conv2", config.ff_filter, config.dim,
                     config.ff_kernel2, rng);
  ff_norm_ = LayerNormLayer(store, name + ".ff.norm", config.dim);
}

Var FftBlock::operator()(Context& ctx, Var x, std::span<const int> lengths) const {
  const int head_dim = config_.dim / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var q = query_(ctx, x);
  Var k = key_(ctx, x);
  Var v = value_(ctx, x);
  std::vector<Var> heads;
  heads.reserve(config_.heads);
  for (int h = 0; h < config_.heads; ++h) {
    const int c0 = h * head_dim;
    heads.push_back(BlockAttention(SliceCols(q, c0, head_dim), SliceCols(k, c0, head_dim),
                                   SliceCols(v, c0, head_dim), lengths, lengths, scale)
                        .out);
  }
  Var attn = heads.size() == 1 ? heads.front() : ConcatCols(heads);
  Var h = attn_norm_(ctx, Add(x, output_(ctx, attn)));
  Var ff = ff2_(ctx, Relu(ff1_(ctx, h, lengths)), lengths);
  return ff_norm_(ctx, Add(h, ff));
}

}  // namespace cdfse::nn
