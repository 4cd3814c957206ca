// Copyright 2026 The ITS Authors
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

#include "its/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace its {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    check(d >= 0, "negative extent in shape ", shape_str(s));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  n->data.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.node_->data.begin(), t.node_->data.end(), value);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return full(Shape{}, value, requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  check(shape_numel(shape) == static_cast<int64_t>(data.size()),
        "from_data: shape ", shape_str(shape), " needs ", shape_numel(shape),
        " values, got ", data.size());
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::randn(Shape shape, const CounterRng& rng, double stddev, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  auto& d = t.node_->data;
  for (size_t i = 0; i < d.size(); ++i) d[i] = stddev * rng.normal(i);
  return t;
}

Tensor Tensor::uniform(Shape shape, const CounterRng& rng, double lo, double hi,
                       bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  auto& d = t.node_->data;
  for (size_t i = 0; i < d.size(); ++i) d[i] = rng.uniform(i, lo, hi);
  return t;
}

const Shape& Tensor::shape() const {
  check(defined(), "use of undefined tensor");
  return node_->shape;
}

int64_t Tensor::numel() const {
  check(defined(), "use of undefined tensor");
  return node_->numel();
}

int64_t Tensor::dim(int axis) const {
  const Shape& s = shape();
  check(axis >= 0 && axis < static_cast<int>(s.size()), "axis ", axis,
        " out of range for shape ", shape_str(s));
  return s[static_cast<size_t>(axis)];
}

const std::vector<double>& Tensor::data() const {
  check(defined(), "use of undefined tensor");
  return node_->data;
}

std::vector<double>& Tensor::mutable_data() {
  check(defined(), "use of undefined tensor");
  return node_->data;
}

double Tensor::item() const {
  check(numel() == 1, "item() on tensor of shape ", shape_str(shape()));
  return node_->data[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  const Shape& s = shape();
  check(idx.size() == s.size(), "at(): rank mismatch for shape ", shape_str(s));
  int64_t flat = 0;
  size_t k = 0;
  for (int64_t i : idx) {
    check(i >= 0 && i < s[k], "at(): index out of range for shape ", shape_str(s));
    flat = flat * s[k] + i;
    ++k;
  }
  return node_->data[static_cast<size_t>(flat)];
}

bool Tensor::requires_grad() const { return defined() && node_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  check(defined(), "use of undefined tensor");
  check(!node_->backward_fn, "set_requires_grad on non-leaf tensor");
  node_->requires_grad = on;
}

const std::vector<double>& Tensor::grad() const {
  check(defined(), "use of undefined tensor");
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  check(defined(), "use of undefined tensor");
  node_->grad.assign(node_->data.size(), 0.0);
}

Tensor Tensor::detach() const {
  return from_data(shape(), data(), false);
}

Tensor Tensor::make_result(Shape shape, const char* op) {
  Tensor t = zeros(std::move(shape), false);
  t.node_->op = op;
  return t;
}

void Tensor::attach_backward(const char* op, std::vector<Tensor> parents,
                             std::function<void(detail::Node&)> fn) {
  node_->op = op;
  node_->requires_grad = true;
  node_->parents = std::move(parents);
  node_->backward_fn = std::move(fn);
}

bool track_any(std::initializer_list<const Tensor*> inputs) {
  if (!GradMode::enabled()) return false;
  for (const Tensor* t : inputs)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

void Tensor::backward() const {
  check(defined(), "backward on undefined tensor");
  check(numel() == 1, "backward: loss must be scalar, got shape ", shape_str(shape()));

  // Iterative post-order DFS.
  std::vector<detail::Node*> topo;
  std::unordered_set<detail::Node*> visited;
  struct Frame {
    detail::Node* n;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  if (visited.insert(node_.get()).second) stack.push_back({node_.get(), 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.n->parents.size()) {
      detail::Node* p = f.n->parents[f.next_parent++].node().get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      topo.push_back(f.n);
      stack.pop_back();
    }
  }

  // Interior gradients are per-pass; leaf gradients accumulate across passes.
  for (detail::Node* n : topo)
    if (n->backward_fn) n->grad.assign(n->data.size(), 0.0);
  node_->ensure_grad()[0] += 1.0;

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace its
