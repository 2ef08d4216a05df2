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

#include "cdfse/nn/graph.h"

#include "cdfse/common/errors.h"

namespace cdfse::nn {

const Matrix& Var::value() const { return graph_->ValueOf(id_); }

Matrix Var::grad() const {
  if (graph_->HasGrad(id_)) return graph_->GradOf(id_);
  const Matrix& v = value();
  return Matrix::Zero(v.rows(), v.cols());
}

bool Var::requires_grad() const { return graph_->RequiresGrad(id_); }

Var Graph::Push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::Constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return Push(std::move(n));
}

Var Graph::Input(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  return Push(std::move(n));
}

Var Graph::Param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = grad_enabled_ && p.trainable;
  n.param = &p;
  return Push(std::move(n));
}

Var Graph::Record(Matrix value, std::initializer_list<Var> inputs,
                  BackwardFn backward) {
  return Record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Graph::Record(Matrix value, const std::vector<Var>& inputs,
                  BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      if (v.valid() && v.requires_grad()) {
        n.requires_grad = true;
        break;
      }
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return Push(std::move(n));
}

Matrix& Graph::GradOf(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::Backward(Var loss) {
  if (loss.graph() != this) throw UsageError("loss belongs to another graph");
  if (backward_done_) {
    throw UsageError("backward called twice on one forward pass");
  }
  if (loss.value().size() != 1) throw UsageError("backward needs a scalar loss");
  backward_done_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  GradOf(loss.id()).setConstant(1.0);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

}  // namespace cdfse::nn
