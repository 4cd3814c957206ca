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
//
// Minimal dense tensor with reverse-mode autodiff. The graph is rebuilt on
// every forward pass; tracked tensors are never mutated in place. Values are
// held as doubles; 32-bit behaviour is realized by snapping parameters after
// optimizer updates (see optim.hpp) and by the on-disk dtype.

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "its/common.hpp"
#include "its/rng.hpp"

namespace its {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Thread-local graph recording switch.
struct GradMode {
  static bool enabled();
  static void set(bool on);
};

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class Tensor;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until touched by backward / grad()
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<Tensor> parents;
  // Reads node.grad, accumulates into parents' grads. Empty for leaves.
  std::function<void(Node&)> backward_fn;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  // i.i.d. N(0, stddev^2), element i drawn at counter i.
  static Tensor randn(Shape shape, const CounterRng& rng, double stddev = 1.0,
                      bool requires_grad = false);
  static Tensor uniform(Shape shape, const CounterRng& rng, double lo, double hi,
                        bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int64_t numel() const;
  int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(shape().size()); }

  const std::vector<double>& data() const;
  std::vector<double>& mutable_data();  // leaves only; never call on graph outputs

  double item() const;  // scalar tensors
  double at(std::initializer_list<int64_t> idx) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);  // leaves only

  // Zero-filled until backward reaches this tensor.
  const std::vector<double>& grad() const;
  void zero_grad();

  // Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
  // interior gradients are per-call.
  void backward() const;

  // Graph-free copy of the values.
  Tensor detach() const;

  std::shared_ptr<detail::Node>& node() { return node_; }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

  // Op constructors (used by ops.cpp).
  static Tensor make_result(Shape shape, const char* op);
  void attach_backward(const char* op, std::vector<Tensor> parents,
                       std::function<void(detail::Node&)> fn);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

// True when recording is on and any input needs grad.
bool track_any(std::initializer_list<const Tensor*> inputs);

}  // namespace its
