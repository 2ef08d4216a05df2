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

#ifndef CDFSE_NN_GRAPH_H_
#define CDFSE_NN_GRAPH_H_

#include <deque>
#include <functional>
#include <vector>

#include "cdfse/nn/tensor.h"

namespace cdfse::nn {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while its Graph lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  int id() const { return id_; }

  const Matrix& value() const;
  // Gradient after Graph::Backward; a zero matrix when nothing flowed here.
  Matrix grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;

 private:
  friend class Graph;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. Operations append nodes in evaluation order; Backward
// walks them in reverse. One Graph corresponds to one forward pass; it is not
// thread-safe but distinct graphs are independent.
class Graph {
 public:
  // Called with the graph and the id of the node being differentiated.
  using BackwardFn = std::function<void(Graph&, int)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  // Leaf without gradient.
  Var Constant(Matrix value);
  // Leaf that records a gradient (used for input-gradient checks).
  Var Input(Matrix value);
  // Leaf bound to a parameter; Backward accumulates into `p.grad`.
  Var Param(Parameter& p);

  // Populates gradients of every reachable leaf. `loss` must be 1x1.
  void Backward(Var loss);

  // For op implementations. `inputs` decide whether the node needs a
  // gradient; `backward` is dropped when none of them does.
  Var Record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var Record(Matrix value, const std::vector<Var>& inputs, BackwardFn backward);

  const Matrix& ValueOf(int id) const { return nodes_[id].value; }
  // Gradient buffer of node `id`, zero-allocated on first use.
  Matrix& GradOf(int id);
  bool HasGrad(int id) const { return nodes_[id].has_grad; }
  bool RequiresGrad(int id) const { return nodes_[id].requires_grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  Var Push(Node node);

  bool grad_enabled_;
  bool backward_done_ = false;
  // Deque keeps value references stable while later ops append nodes.
  std::deque<Node> nodes_;
};

}  // namespace cdfse::nn

#endif  // CDFSE_NN_GRAPH_H_
