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

#include "cdfse/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdfse/common/errors.h"

namespace cdfse::nn {
namespace {

std::string ShapeStr(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void RequireSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput(std::string(op) + ": shape mismatch " + ShapeStr(a) +
                       " vs " + ShapeStr(b));
  }
}

void RequireRows(const Matrix& x, std::span<const int> lengths, const char* op) {
  for (int n : lengths) {
    if (n < 1) throw InvalidInput(std::string(op) + ": empty sequence");
  }
  if (TotalLength(lengths) != x.rows()) {
    throw InvalidInput(std::string(op) + ": lengths sum " +
                       std::to_string(TotalLength(lengths)) + " != rows " +
                       std::to_string(x.rows()));
  }
}

// Accumulates into the gradient of `v` when it participates in
// differentiation.
template <typename Expr>
void Accumulate(Graph& g, Var v, const Expr& delta) {
  if (v.valid() && g.RequiresGrad(v.id())) g.GradOf(v.id()) += delta;
}

Var Scalar(Graph& g, double value, std::vector<Var> inputs, Graph::BackwardFn fn) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return g.Record(std::move(m), inputs, std::move(fn));
}

}  // namespace

Var Add(Var a, Var b) {
  RequireSameShape(a.value(), b.value(), "Add");
  Graph& g = *a.graph();
  return g.Record(a.value() + b.value(), {a, b}, [a, b](Graph& g, int self) {
    const Matrix& go = g.GradOf(self);
    Accumulate(g, a, go);
    Accumulate(g, b, go);
  });
}

Var Sub(Var a, Var b) {
  RequireSameShape(a.value(), b.value(), "Sub");
  Graph& g = *a.graph();
  return g.Record(a.value() - b.value(), {a, b}, [a, b](Graph& g, int self) {
    const Matrix& go = g.GradOf(self);
    Accumulate(g, a, go);
    Accumulate(g, b, -go);
  });
}

Var Scale(Var x, double s) {
  Graph& g = *x.graph();
  return g.Record(x.value() * s, {x}, [x, s](Graph& g, int self) {
    Accumulate(g, x, g.GradOf(self) * s);
  });
}

Var AddRowBroadcast(Var x, Var row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw InvalidInput("AddRowBroadcast: row " + ShapeStr(row.value()) +
                       " does not match " + ShapeStr(x.value()));
  }
  Graph& g = *x.graph();
  Matrix out = x.value();
  out.rowwise() += row.value().row(0);
  return g.Record(std::move(out), {x, row}, [x, row](Graph& g, int self) {
    const Matrix& go = g.GradOf(self);
    Accumulate(g, x, go);
    Accumulate(g, row, go.colwise().sum());
  });
}

Var AddConstant(Var x, const Matrix& c) {
  RequireSameShape(x.value(), c, "AddConstant");
  Graph& g = *x.graph();
  return g.Record(x.value() + c, {x}, [x](Graph& g, int self) {
    Accumulate(g, x, g.GradOf(self));
  });
}

Var MatMul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw InvalidInput("MatMul: inner extents differ " + ShapeStr(a.value()) +
                       " * " + ShapeStr(b.value()));
  }
  Graph& g = *a.graph();
  Matrix out = a.value() * b.value();
  return g.Record(std::move(out), {a, b}, [a, b](Graph& g, int self) {
    const Matrix& go = g.GradOf(self);
    if (g.RequiresGrad(a.id())) g.GradOf(a.id()).noalias() += go * b.value().transpose();
    if (g.RequiresGrad(b.id())) g.GradOf(b.id()).noalias() += a.value().transpose() * go;
  });
}

Var Linear(Var x, Var w, Var b) {
  if (x.cols() != w.rows()) {
    throw InvalidInput("linear: input " + ShapeStr(x.value()) +
                       " does not match weight " + ShapeStr(w.value()));
  }
  if (b.valid() && (b.rows() != 1 || b.cols() != w.cols())) {
    throw InvalidInput("linear: bias " + ShapeStr(b.value()) +
                       " does not match weight " + ShapeStr(w.value()));
  }
  Graph& g = *x.graph();
  Matrix out = x.value() * w.value();
  if (b.valid()) out.rowwise() += b.value().row(0);
  return g.Record(std::move(out), {x, w, b}, [x, w, b](Graph& g, int self) {
    const Matrix& go = g.GradOf(self);
    if (g.RequiresGrad(x.id())) g.GradOf(x.id()).noalias() += go * w.value().transpose();
    if (g.RequiresGrad(w.id())) g.GradOf(w.id()).noalias() += x.value().transpose() * go;
    if (b.valid()) Accumulate(g, b, go.colwise().sum());
  });
}

namespace {

Matrix Im2Col(const Matrix& x, int kernel_size, std::span<const int> lengths) {
  const int cin = static_cast<int>(x.cols());
  const int half = kernel_size / 2;
  Matrix col = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(kernel_size) * cin);
  int offset = 0;
  for (int n : lengths) {
    for (int t = 0; t < n; ++t) {
      for (int k = 0; k < kernel_size; ++k) {
        const int src = t + k - half;
        if (src < 0 || src >= n) continue;
        col.block(offset + t, k * cin, 1, cin) = x.row(offset + src);
      }
    }
    offset += n;
  }
  return col;
}

void Col2ImAccumulate(const Matrix& dcol, int kernel_size, int cin,
                      std::span<const int> lengths, Matrix& dx) {
  const int half = kernel_size / 2;
  int offset = 0;
  for (int n : lengths) {
    for (int t = 0; t < n; ++t) {
      for (int k = 0; k < kernel_size; ++k) {
        const int src = t + k - half;
        if (src < 0 || src >= n) continue;
        dx.row(offset + src) += dcol.block(offset + t, k * cin, 1, cin);
      }
    }
    offset += n;
  }
}

}  // namespace

Var Conv1d(Var x, Var kernel, Var bias, int kernel_size,
           std::span<const int> lengths) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ConfigError("conv1d: kernel size must be odd, got " +
                      std::to_string(kernel_size));
  }
  RequireRows(x.value(), lengths, "conv1d");
  if (kernel.rows() != kernel_size * x.cols()) {
    throw InvalidInput("conv1d: kernel " + ShapeStr(kernel.value()) +
                       " does not match K=" + std::to_string(kernel_size) +
                       " Cin=" + std::to_string(x.cols()));
  }
  if (bias.valid() && (bias.rows() != 1 || bias.cols() != kernel.cols())) {
    throw InvalidInput("conv1d: bias shape " + ShapeStr(bias.value()));
  }
  Graph& g = *x.graph();
  Matrix col = Im2Col(x.value(), kernel_size, lengths);
  Matrix out = col * kernel.value();
  if (bias.valid()) out.rowwise() += bias.value().row(0);
  Lengths lens(lengths.begin(), lengths.end());
  return g.Record(
      std::move(out), {x, kernel, bias},
      [x, kernel, bias, kernel_size, lens, col = std::move(col)](Graph& g, int self) {
        const Matrix& go = g.GradOf(self);
        if (g.RequiresGrad(kernel.id())) {
          g.GradOf(kernel.id()).noalias() += col.transpose() * go;
        }
        if (bias.valid()) Accumulate(g, bias, go.colwise().sum());
        if (g.RequiresGrad(x.id())) {
          Matrix dcol = go * kernel.value().transpose();
          Col2ImAccumulate(dcol, kernel_size, static_cast<int>(x.cols()), lens,
                           g.GradOf(x.id()));
        }
      });
}

Lengths PooledLengths(std::span<const int> lengths) {
  Lengths out;
  out.reserve(lengths.size());
  for (int n : lengths) out.push_back((n + 1) / 2);
  return out;
}

Var AvgPool1d(Var x, std::span<const int> lengths) {
  RequireRows(x.value(), lengths, "avgpool1d");
  Graph& g = *x.graph();
  const Lengths out_lens = PooledLengths(lengths);
  Matrix out(TotalLength(out_lens), x.cols());
  // (first, second) source rows of every output row.
  std::vector<std::pair<int, int>> src;
  src.reserve(out.rows());
  int in_off = 0;
  int out_row = 0;
  for (int n : lengths) {
    for (int j = 0; j < (n + 1) / 2; ++j) {
      const int a = in_off + 2 * j;
      const int b = in_off + std::min(2 * j + 1, n - 1);
      out.row(out_row++) = 0.5 * (x.value().row(a) + x.value().row(b));
      src.emplace_back(a, b);
    }
    in_off += n;
  }
  return g.Record(std::move(out), {x}, [x, src = std::move(src)](Graph& g, int self) {
    if (!g.RequiresGrad(x.id())) return;
    const Matrix& go = g.GradOf(self);
    Matrix& gx = g.GradOf(x.id());
    for (size_t r = 0; r < src.size(); ++r) {
      gx.row(src[r].first) += 0.5 * go.row(r);
      gx.row(src[r].second) += 0.5 * go.row(r);
    }
  });
}

Var Relu(Var x) {
  Graph& g = *x.graph();
  return g.Record(x.value().cwiseMax(0.0), {x}, [x](Graph& g, int self) {
    const Matrix& go = g.GradOf(self);
    Accumulate(g, x, (x.value().array() > 0.0).cast<double>().matrix().cwiseProduct(go));
  });
}

Var Tanh(Var x) {
  Graph& g = *x.graph();
  Matrix out = x.value().array().tanh().matrix();
  return g.Record(out, {x}, [x, out](Graph& g, int self) {
    const Matrix& go = g.GradOf(self);
    Accumulate(g, x, go.cwiseProduct((1.0 - out.array().square()).matrix()));
  });
}

Var BatchNormTrain(Var x, Var gamma, Var beta, double eps, BatchStats* stats) {
  const Eigen::Index n = x.rows();
  if (n < 2) {
    throw InvalidInput("batchnorm: training mode needs at least 2 rows, got " +
                       std::to_string(n));
  }
  if (gamma.cols() != x.cols() || beta.cols() != x.cols()) {
    throw InvalidInput("batchnorm: scale/shift width mismatch");
  }
  Graph& g = *x.graph();
  const RowVector mean = x.value().colwise().mean();
  Matrix centered = x.value().rowwise() - mean;
  const RowVector var = centered.array().square().colwise().mean().matrix();
  const RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix xhat = centered.array().rowwise() * inv_std.array();
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  if (stats != nullptr) {
    stats->mean = mean;
    stats->var = var;
  }
  return g.Record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std](Graph& g, int self) {
        const Matrix& go = g.GradOf(self);
        Accumulate(g, beta, go.colwise().sum());
        Accumulate(g, gamma, go.cwiseProduct(xhat).colwise().sum());
        if (!g.RequiresGrad(x.id())) return;
        const double n = static_cast<double>(xhat.rows());
        Matrix dxhat = go.array().rowwise() * gamma.value().row(0).array();
        const RowVector sum_d = dxhat.colwise().sum();
        const RowVector sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
        Matrix dx = (n * dxhat.array()).matrix();
        dx.rowwise() -= sum_d;
        dx -= (xhat.array().rowwise() * sum_dx.array()).matrix();
        dx = (dx.array().rowwise() * (inv_std.array() / n)).matrix();
        g.GradOf(x.id()) += dx;
      });
}

Var BatchNormEval(Var x, Var gamma, Var beta, const RowVector& mean,
                  const RowVector& var, double eps) {
  if (gamma.cols() != x.cols() || mean.cols() != x.cols() || var.cols() != x.cols()) {
    throw InvalidInput("batchnorm: running stats width mismatch");
  }
  Graph& g = *x.graph();
  const RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix xhat = (x.value().rowwise() - mean).array().rowwise() * inv_std.array();
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  return g.Record(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, xhat = std::move(xhat), inv_std](Graph& g, int self) {
                    const Matrix& go = g.GradOf(self);
                    Accumulate(g, beta, go.colwise().sum());
                    Accumulate(g, gamma, go.cwiseProduct(xhat).colwise().sum());
                    const RowVector scale = gamma.value().row(0).cwiseProduct(inv_std);
                    Accumulate(g, x, (go.array().rowwise() * scale.array()).matrix());
                  });
}

Var LayerNorm(Var x, Var gamma, Var beta, double eps) {
  if (gamma.cols() != x.cols() || beta.cols() != x.cols()) {
    throw InvalidInput("layernorm: scale/shift width mismatch");
  }
  Graph& g = *x.graph();
  const Eigen::VectorXd mean = x.value().rowwise().mean();
  Matrix centered = x.value().colwise() - mean;
  const Eigen::VectorXd var = centered.array().square().rowwise().mean().matrix();
  const Eigen::VectorXd inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  return g.Record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std](Graph& g, int self) {
        const Matrix& go = g.GradOf(self);
        Accumulate(g, beta, go.colwise().sum());
        Accumulate(g, gamma, go.cwiseProduct(xhat).colwise().sum());
        if (!g.RequiresGrad(x.id())) return;
        const double d = static_cast<double>(xhat.cols());
        Matrix dxhat = go.array().rowwise() * gamma.value().row(0).array();
        const Eigen::VectorXd sum_d = dxhat.rowwise().sum();
        const Eigen::VectorXd sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
        Matrix dx = d * dxhat;
        dx.colwise() -= sum_d;
        dx -= (xhat.array().colwise() * sum_dx.array()).matrix();
        dx = (dx.array().colwise() * (inv_std.array() / d)).matrix();
        g.GradOf(x.id()) += dx;
      });
}

namespace {

Matrix StableSoftmax(const Matrix& x) {
  Matrix out = x.colwise() - x.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  const Eigen::VectorXd sums = out.rowwise().sum();
  out = (out.array().colwise() / sums.array()).matrix();
  return out;
}

// d(softmax) given the softmax output p and upstream gradient dp.
Matrix SoftmaxBackward(const Matrix& p, const Matrix& dp) {
  const Eigen::VectorXd dot = p.cwiseProduct(dp).rowwise().sum();
  Matrix ds = dp.colwise() - dot;
  return p.cwiseProduct(ds);
}

}  // namespace

Var SoftmaxRows(Var x) {
  Graph& g = *x.graph();
  Matrix out = StableSoftmax(x.value());
  return g.Record(out, {x}, [x, out](Graph& g, int self) {
    Accumulate(g, x, SoftmaxBackward(out, g.GradOf(self)));
  });
}

AttentionOutput BlockAttention(Var q, Var k, Var v,
                               std::span<const int> q_lengths,
                               std::span<const int> k_lengths, double scale) {
  if (q_lengths.size() != k_lengths.size()) {
    throw InvalidInput("attention: query/key sequence counts differ");
  }
  if (q.cols() != k.cols()) {
    throw InvalidInput("attention: query/key feature extents differ " +
                       ShapeStr(q.value()) + " vs " + ShapeStr(k.value()));
  }
  if (k.rows() != v.rows()) throw InvalidInput("attention: key/value rows differ");
  for (int s : k_lengths) {
    if (s < 1) throw InvalidInput("attention: needs at least one key (S=0)");
  }
  RequireRows(q.value(), q_lengths, "attention");
  RequireRows(k.value(), k_lengths, "attention");
  Graph& g = *q.graph();
  const std::vector<int> qo = Offsets(q_lengths);
  const std::vector<int> ko = Offsets(k_lengths);
  Matrix out(q.rows(), v.cols());
  std::vector<Matrix> weights(q_lengths.size());
  for (size_t b = 0; b < q_lengths.size(); ++b) {
    const auto qb = q.value().middleRows(qo[b], q_lengths[b]);
    const auto kb = k.value().middleRows(ko[b], k_lengths[b]);
    const auto vb = v.value().middleRows(ko[b], k_lengths[b]);
    Matrix scores = (qb * kb.transpose()) * scale;
    weights[b] = StableSoftmax(scores);
    out.middleRows(qo[b], q_lengths[b]).noalias() = weights[b] * vb;
  }
  AttentionOutput result;
  result.weights = weights;
  result.out = g.Record(
      std::move(out), {q, k, v},
      [q, k, v, qo, ko, weights = std::move(weights), scale](Graph& g, int self) {
        const Matrix& go = g.GradOf(self);
        const bool need_q = g.RequiresGrad(q.id());
        const bool need_k = g.RequiresGrad(k.id());
        const bool need_v = g.RequiresGrad(v.id());
        for (size_t b = 0; b < weights.size(); ++b) {
          const int lq = qo[b + 1] - qo[b];
          const int lk = ko[b + 1] - ko[b];
          const Matrix& p = weights[b];
          const auto gob = go.middleRows(qo[b], lq);
          if (need_v) g.GradOf(v.id()).middleRows(ko[b], lk).noalias() += p.transpose() * gob;
          if (!need_q && !need_k) continue;
          const Matrix dp = gob * v.value().middleRows(ko[b], lk).transpose();
          const Matrix ds = SoftmaxBackward(p, dp) * scale;
          if (need_q) {
            g.GradOf(q.id()).middleRows(qo[b], lq).noalias() +=
                ds * k.value().middleRows(ko[b], lk);
          }
          if (need_k) {
            g.GradOf(k.id()).middleRows(ko[b], lk).noalias() +=
                ds.transpose() * q.value().middleRows(qo[b], lq);
          }
        }
      });
  return result;
}

AttentionOutput ScaledDotAttention(Var q, Var k, Var v) {
  if (k.rows() == 0) throw InvalidInput("attention: needs at least one key (S=0)");
  const int lq[] = {static_cast<int>(q.rows())};
  const int lk[] = {static_cast<int>(k.rows())};
  return BlockAttention(q, k, v, lq, lk, 1.0 / std::sqrt(static_cast<double>(q.cols())));
}

Var SliceCols(Var x, int start, int count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    throw InvalidInput("slice: columns out of range");
  }
  Graph& g = *x.graph();
  return g.Record(x.value().middleCols(start, count), {x},
                  [x, start, count](Graph& g, int self) {
                    if (!g.RequiresGrad(x.id())) return;
                    g.GradOf(x.id()).middleCols(start, count) += g.GradOf(self);
                  });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidInput("concat: no inputs");
  Graph& g = *parts.front().graph();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw InvalidInput("concat: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return g.Record(std::move(out), parts, [parts](Graph& g, int self) {
    const Matrix& go = g.GradOf(self);
    Eigen::Index c = 0;
    for (const Var& p : parts) {
      Accumulate(g, p, go.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var GatherRows(Var x, std::vector<int> index) {
  Graph& g = *x.graph();
  Matrix out(static_cast<Eigen::Index>(index.size()), x.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= x.rows()) {
      throw InvalidInput("gather: row index " + std::to_string(index[i]) +
                         " out of range");
    }
    out.row(i) = x.value().row(index[i]);
  }
  return g.Record(std::move(out), {x}, [x, index = std::move(index)](Graph& g, int self) {
    if (!g.RequiresGrad(x.id())) return;
    const Matrix& go = g.GradOf(self);
    Matrix& gx = g.GradOf(x.id());
    for (size_t i = 0; i < index.size(); ++i) gx.row(index[i]) += go.row(i);
  });
}

Var SegmentMean(Var x, std::span<const int> lengths) {
  RequireRows(x.value(), lengths, "segment mean");
  Graph& g = *x.graph();
  const std::vector<int> off = Offsets(lengths);
  Matrix out(static_cast<Eigen::Index>(lengths.size()), x.cols());
  for (size_t b = 0; b < lengths.size(); ++b) {
    out.row(b) = x.value().middleRows(off[b], lengths[b]).colwise().mean();
  }
  return g.Record(std::move(out), {x}, [x, off](Graph& g, int self) {
    if (!g.RequiresGrad(x.id())) return;
    const Matrix& go = g.GradOf(self);
    Matrix& gx = g.GradOf(x.id());
    for (size_t b = 0; b + 1 < off.size(); ++b) {
      const int n = off[b + 1] - off[b];
      gx.middleRows(off[b], n).rowwise() += go.row(b) / static_cast<double>(n);
    }
  });
}

Var CrossEntropy(Var logits, std::span<const int> targets) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index c = logits.cols();
  if (static_cast<Eigen::Index>(targets.size()) != n || n == 0) {
    throw InvalidInput("cross_entropy: " + std::to_string(targets.size()) +
                       " targets for " + std::to_string(n) + " rows");
  }
  for (int t : targets) {
    if (t < 0 || t >= c) {
      throw InvalidInput("cross_entropy: target " + std::to_string(t) +
                         " outside [0," + std::to_string(c) + ")");
    }
  }
  Graph& g = *logits.graph();
  Matrix p = StableSoftmax(logits.value());
  const Eigen::VectorXd max = logits.value().rowwise().maxCoeff();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    // log-sum-exp split around the arg-max term so that very confident rows
    // keep a strictly positive loss.
    Eigen::Index arg = 0;
    logits.value().row(i).maxCoeff(&arg);
    double tail = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      if (j != arg) tail += std::exp(logits.value()(i, j) - max(i));
    }
    loss += (max(i) - logits.value()(i, targets[i])) + std::log1p(tail);
  }
  loss /= static_cast<double>(n);
  std::vector<int> tg(targets.begin(), targets.end());
  return Scalar(g, loss, {logits}, [logits, p = std::move(p), tg](Graph& g, int self) {
    if (!g.RequiresGrad(logits.id())) return;
    const double go = g.GradOf(self)(0, 0) / static_cast<double>(p.rows());
    Matrix d = p;
    for (size_t i = 0; i < tg.size(); ++i) d(i, tg[i]) -= 1.0;
    g.GradOf(logits.id()) += go * d;
  });
}

namespace {

Eigen::VectorXd RowMask(std::span<const double> row_mask, Eigen::Index rows) {
  if (row_mask.empty()) return Eigen::VectorXd::Ones(rows);
  if (static_cast<Eigen::Index>(row_mask.size()) != rows) {
    throw InvalidInput("loss: mask length does not match rows");
  }
  return Eigen::Map<const Eigen::VectorXd>(row_mask.data(), rows);
}

}  // namespace

Var L1Loss(Var pred, const Matrix& target, std::span<const double> row_mask) {
  RequireSameShape(pred.value(), target, "l1 loss");
  Graph& g = *pred.graph();
  const Eigen::VectorXd mask = RowMask(row_mask, pred.rows());
  const double count = mask.sum() * static_cast<double>(pred.cols());
  if (count <= 0.0) throw InvalidInput("l1 loss: empty mask");
  const Matrix diff = pred.value() - target;
  const double loss = (diff.cwiseAbs().array().colwise() * mask.array()).sum() / count;
  return Scalar(g, loss, {pred}, [pred, mask, count, diff](Graph& g, int self) {
    if (!g.RequiresGrad(pred.id())) return;
    const double go = g.GradOf(self)(0, 0) / count;
    Matrix sign = diff.array().sign().matrix();
    g.GradOf(pred.id()) += go * (sign.array().colwise() * mask.array()).matrix();
  });
}

Var MseLoss(Var pred, const Matrix& target, std::span<const double> row_mask) {
  RequireSameShape(pred.value(), target, "mse loss");
  Graph& g = *pred.graph();
  const Eigen::VectorXd mask = RowMask(row_mask, pred.rows());
  const double count = mask.sum() * static_cast<double>(pred.cols());
  if (count <= 0.0) throw InvalidInput("mse loss: empty mask");
  const Matrix diff = pred.value() - target;
  const double loss = (diff.array().square().colwise() * mask.array()).sum() / count;
  return Scalar(g, loss, {pred}, [pred, mask, count, diff](Graph& g, int self) {
    if (!g.RequiresGrad(pred.id())) return;
    const double go = g.GradOf(self)(0, 0) * 2.0 / count;
    g.GradOf(pred.id()) += go * (diff.array().colwise() * mask.array()).matrix();
  });
}

Var Sum(Var x) {
  Graph& g = *x.graph();
  return Scalar(g, x.value().sum(), {x}, [x](Graph& g, int self) {
    if (!g.RequiresGrad(x.id())) return;
    g.GradOf(x.id()).array() += g.GradOf(self)(0, 0);
  });
}

Var SumSquares(Var x) {
  Graph& g = *x.graph();
  return Scalar(g, x.value().squaredNorm(), {x}, [x](Graph& g, int self) {
    Accumulate(g, x, 2.0 * g.GradOf(self)(0, 0) * x.value());
  });
}

Var WeightedSum(const std::vector<Var>& scalars, std::span<const double> weights) {
  if (scalars.empty() || scalars.size() != weights.size()) {
    throw InvalidInput("weighted sum: term/weight count mismatch");
  }
  Graph& g = *scalars.front().graph();
  double total = 0.0;
  for (size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].value().size() != 1) throw InvalidInput("weighted sum: non-scalar term");
    total += weights[i] * scalars[i].value()(0, 0);
  }
  std::vector<double> w(weights.begin(), weights.end());
  return Scalar(g, total, scalars, [scalars, w](Graph& g, int self) {
    const double go = g.GradOf(self)(0, 0);
    for (size_t i = 0; i < scalars.size(); ++i) {
      if (g.RequiresGrad(scalars[i].id())) g.GradOf(scalars[i].id())(0, 0) += w[i] * go;
    }
  });
}

Matrix SinusoidalPositions(std::span<const int> lengths, int dim) {
  Matrix out(TotalLength(lengths), dim);
  int row = 0;
  for (int n : lengths) {
    for (int pos = 0; pos < n; ++pos, ++row) {
      for (int i = 0; i < dim; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
        out(row, i) = (i % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
      }
    }
  }
  return out;
}

}  // namespace cdfse::nn
