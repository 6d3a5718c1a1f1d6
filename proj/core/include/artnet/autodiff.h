// Copyright (c) 2026 The ARTNet-cpp Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "artnet/tensor.h"

namespace artnet {

class Var;

/// Maps the gradient of a node's output to one gradient per parent. An empty
/// Tensor in the result means "no contribution".
using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

/// Vertex of the define-by-run graph.
struct Node {
  Tensor value;
  std::optional<Tensor> grad;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
  bool requires_grad = false;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  /// Releases long parent chains iteratively.
  ~Node();

  void Accumulate(Tensor g);
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  /// Builds an interior node. The node only records parents and the backward
  /// rule when at least one parent requires a gradient.
  static Var FromOp(Tensor value, const std::vector<Var>& parents,
                    BackwardFn backward);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  /// Direct access for optimizers and checkpoint loading.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && node_->grad.has_value(); }
  /// Gradient, or nullptr when none was materialized.
  const Tensor* grad() const;
  /// Drops the gradient buffer (next backward starts from zero).
  void ZeroGrad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Reverse sweep from a scalar loss (every extent 1). Gradients accumulate
/// into whatever is already stored on the leaves.
void Backward(const Var& loss);

struct GradCheckOptions {
  double step = 1e-5;
  double rel_threshold = 1e-4;
  double abs_floor = 1e-8;
  /// Inputs are drawn from uniform(-input_range, input_range).
  double input_range = 1.0;
};

struct GradCheckReport {
  std::string op_name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = false;
  double perturbation = 0.0;
};

using DifferentiableFn = std::function<Var(std::span<const Var>)>;

/// Compares analytic gradients of `fn` against central differences
/// (f(x+h) - f(x-h)) / 2h. Non-scalar outputs are contracted with a fixed
/// random projection first. Inputs are seeded uniform draws unless
/// `inputs` is non-empty, in which case those values are used as-is.
GradCheckReport GradCheck(const std::string& op_name, const DifferentiableFn& fn,
                          const std::vector<Shape>& input_shapes, uint64_t seed,
                          const GradCheckOptions& options = {},
                          std::vector<Tensor> inputs = {});

}  // namespace artnet
