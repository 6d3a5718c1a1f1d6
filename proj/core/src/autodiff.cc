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

#include "artnet/autodiff.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "artnet/error.h"

namespace artnet {

Node::~Node() {
  backward = nullptr;
  std::vector<std::shared_ptr<Node>> stack = std::move(parents);
  while (!stack.empty()) {
    std::shared_ptr<Node> n = std::move(stack.back());
    stack.pop_back();
    if (n.use_count() == 1) {
      n->backward = nullptr;
      for (auto& p : n->parents) stack.push_back(std::move(p));
      n->parents.clear();
    }
  }
}

void Node::Accumulate(Tensor g) {
  if (!grad) {
    if (g.shape() != value.shape()) {
      throw ShapeError("gradient shape " + ShapeToString(g.shape()) +
                       " does not match value shape " +
                       ShapeToString(value.shape()));
    }
    grad = std::move(g);
  } else {
    grad->AddInPlace(g);
  }
}

Var::Var(Tensor value, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::FromOp(Tensor value, const std::vector<Var>& parents,
                BackwardFn backward) {
  Var out(std::move(value), false);
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Var& p) { return p.requires_grad(); });
  if (any) {
    out.node_->requires_grad = true;
    out.node_->backward = std::move(backward);
    out.node_->parents.reserve(parents.size());
    for (const Var& p : parents) out.node_->parents.push_back(p.node_);
  }
  return out;
}

const Tensor* Var::grad() const {
  if (!node_ || !node_->grad) return nullptr;
  return &*node_->grad;
}

void Var::ZeroGrad() {
  if (node_) node_->grad.reset();
}

void Backward(const Var& loss) {
  if (!loss.defined()) throw ContractError("backward on undefined variable");
  for (int64_t e : loss.shape()) {
    if (e != 1) {
      throw ContractError("backward needs a scalar loss, got shape " +
                          ShapeToString(loss.shape()));
    }
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; reversed it is a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are scratch space; leaves keep accumulating.
  for (Node* n : order) {
    if (n->backward) n->grad.reset();
  }
  loss.node()->Accumulate(Tensor::Ones(loss.shape()));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward || !n->grad) continue;
    std::vector<Tensor> pg = n->backward(*n->grad);
    for (size_t i = 0; i < n->parents.size() && i < pg.size(); ++i) {
      Node* p = n->parents[i].get();
      if (!p->requires_grad || pg[i].empty()) continue;
      p->Accumulate(std::move(pg[i]));
    }
    n->grad.reset();
  }
}

namespace {

double ProjectedLoss(const Tensor& out, const Tensor& projection) {
  double s = 0.0;
  for (int64_t i = 0; i < out.size(); ++i) s += out[i] * projection[i];
  return s;
}

}  // namespace

GradCheckReport GradCheck(const std::string& op_name, const DifferentiableFn& fn,
                          const std::vector<Shape>& input_shapes, uint64_t seed,
                          const GradCheckOptions& options,
                          std::vector<Tensor> inputs) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-options.input_range,
                                             options.input_range);
  if (inputs.empty()) {
    for (const Shape& s : input_shapes) {
      Tensor t(s);
      for (double& v : t.data()) v = uni(rng);
      inputs.push_back(std::move(t));
    }
  }

  auto evaluate = [&](const std::vector<Tensor>& values) {
    std::vector<Var> vars;
    vars.reserve(values.size());
    for (const Tensor& v : values) vars.emplace_back(v, false);
    return fn(vars).value();
  };

  const Tensor probe = evaluate(inputs);
  std::uniform_real_distribution<double> proj_dist(-1.0, 1.0);
  Tensor projection(probe.shape());
  for (double& v : projection.data()) v = proj_dist(rng);

  // Analytic pass: loss = <fn(x), projection>.
  std::vector<Var> leaves;
  for (const Tensor& v : inputs) leaves.emplace_back(v, true);
  Var out = fn(leaves);
  Var loss = Var::FromOp(
      Tensor(Shape{1}, ProjectedLoss(out.value(), projection)), {out},
      [projection](const Tensor& g) {
        return std::vector<Tensor>{Scale(projection, g.item())};
      });
  Backward(loss);

  GradCheckReport report;
  report.op_name = op_name;
  report.perturbation = options.step;
  const double h = options.step;
  for (size_t k = 0; k < inputs.size(); ++k) {
    const Tensor* analytic = leaves[k].grad();
    for (int64_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + h;
      const double fp = ProjectedLoss(evaluate(inputs), projection);
      inputs[k][i] = saved - h;
      const double fm = ProjectedLoss(evaluate(inputs), projection);
      inputs[k][i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic ? (*analytic)[i] : 0.0;
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      report.max_rel_error = std::max(report.max_rel_error, abs_err / denom);
    }
  }
  report.passed = report.max_rel_error <= options.rel_threshold ||
                  report.max_abs_error <= options.abs_floor;
  return report;
}

}  // namespace artnet
