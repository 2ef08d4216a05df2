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

#ifndef CDFSE_NN_OPS_H_
#define CDFSE_NN_OPS_H_

#include <span>
#include <vector>

#include "cdfse/nn/graph.h"

namespace cdfse::nn {

// Differentiable primitives. Every op throws InvalidInput on shape mismatch.
// Ops taking `lengths` treat the rows of their input as packed sequences and
// never mix rows across sequence boundaries.

Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Scale(Var x, double s);
// x + row, with `row` (1 x C) broadcast over every row of x.
Var AddRowBroadcast(Var x, Var row);
Var AddConstant(Var x, const Matrix& c);
Var MatMul(Var a, Var b);

// out[n,j] = sum_i x[n,i] * w[i,j] + b[j]. `b` may be an invalid Var.
Var Linear(Var x, Var w, Var b);

// Same-padded 1-D convolution. `kernel` is (K*Cin) x Cout with row index
// k*Cin + c; zero padding is applied at both ends of every sequence.
Var Conv1d(Var x, Var kernel, Var bias, int kernel_size,
           std::span<const int> lengths);

// Non-overlapping window-2 average pooling per sequence; an odd tail frame is
// replicated before pooling, so each sequence shrinks to ceil(n/2).
Var AvgPool1d(Var x, std::span<const int> lengths);
Lengths PooledLengths(std::span<const int> lengths);

Var Relu(Var x);
Var Tanh(Var x);

struct BatchStats {
  RowVector mean;
  RowVector var;  // biased
};

// Training-mode batch normalization over all rows. Requires at least 2 rows.
Var BatchNormTrain(Var x, Var gamma, Var beta, double eps, BatchStats* stats);
Var BatchNormEval(Var x, Var gamma, Var beta, const RowVector& mean,
                  const RowVector& var, double eps);

Var LayerNorm(Var x, Var gamma, Var beta, double eps);

Var SoftmaxRows(Var x);

struct AttentionOutput {
  Var out;
  // One (query rows x key rows) matrix per sequence pair.
  std::vector<Matrix> weights;
};

// softmax(q_b k_b^T * scale) v_b independently for every sequence pair b.
AttentionOutput BlockAttention(Var q, Var k, Var v,
                               std::span<const int> q_lengths,
                               std::span<const int> k_lengths, double scale);
// Single-sequence attention with scale 1/sqrt(d).
AttentionOutput ScaledDotAttention(Var q, Var k, Var v);

Var SliceCols(Var x, int start, int count);
Var ConcatCols(const std::vector<Var>& parts);
// out[i] = x[index[i]].
Var GatherRows(Var x, std::vector<int> index);
// One row per sequence: the mean of that sequence's rows.
Var SegmentMean(Var x, std::span<const int> lengths);

// Mean over rows of -log softmax(logits)[target]. Returns 1x1.
Var CrossEntropy(Var logits, std::span<const int> targets);
// Mean absolute / squared error over the entries of rows whose mask is 1.
// An empty mask selects every row. Returns 1x1.
Var L1Loss(Var pred, const Matrix& target, std::span<const double> row_mask = {});
Var MseLoss(Var pred, const Matrix& target, std::span<const double> row_mask = {});

Var Sum(Var x);
Var SumSquares(Var x);
Var WeightedSum(const std::vector<Var>& scalars, std::span<const double> weights);

// Sinusoidal position table restarting at 0 for every sequence.
Matrix SinusoidalPositions(std::span<const int> lengths, int dim);

}  // namespace cdfse::nn

#endif  // CDFSE_NN_OPS_H_
