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

#pragma once

#include <map>
#include <string>
#include <vector>

#include "its/tensor.hpp"

namespace its {

// Global numeric width. Compute always runs in doubles; f32 narrows parameter
// and optimizer-state values through float after every update and selects the
// on-disk dtype, so f32 checkpoints round-trip bit-exactly.
enum class Precision { f32, f64 };

Precision precision_from_string(const std::string& s);
std::string precision_to_string(Precision p);

struct Parameter {
  std::string name;
  Tensor tensor;
  bool frozen = false;
};

// Named parameter set. Initial values depend only on (seed, name), never on
// registration order, so models can be assembled in any sequence.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : seed_(seed) {}

  // N(0, stddev^2) init; the stream is keyed by fnv1a(name).
  Tensor add_randn(const std::string& name, Shape shape, double stddev);
  Tensor add_zeros(const std::string& name, Shape shape);
  Tensor add_full(const std::string& name, Shape shape, double value);

  bool has(const std::string& name) const;
  Tensor get(const std::string& name) const;
  Parameter& param(const std::string& name);

  // Freezes every parameter whose name starts with prefix: requires_grad off
  // (no graph edges, so gradients stay exactly zero) and skipped by Adam.
  void freeze_prefix(const std::string& prefix);
  std::vector<std::string> frozen_names() const;

  // Pre-sizes zero gradient buffers for all trainable parameters, so after
  // backward any off-path gradient reads as exactly zero.
  void zero_grads();

  const std::vector<Parameter>& params() const { return params_; }
  std::vector<Parameter>& params() { return params_; }
  int64_t total_elements(bool trainable_only = false) const;
  uint64_t seed() const { return seed_; }

  // Narrows every parameter value through float (used on f32 load paths).
  void snap_f32();

 private:
  Tensor add_param(const std::string& name, Tensor t);
  uint64_t seed_;
  std::vector<Parameter> params_;
  std::map<std::string, size_t> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. State (m, v, t) is keyed by parameter name and
// serialized alongside checkpoints so training can resume bit-exactly.
class Adam {
 public:
  Adam(ParamStore* store, AdamConfig cfg, Precision precision);

  // Updates every non-frozen parameter from its gradient; throws if one has
  // no gradient buffer. Does not clear gradients.
  void step();

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  int64_t t() const { return t_; }

  struct Slot {
    std::vector<double> m, v;
  };
  const std::map<std::string, Slot>& state() const { return state_; }
  // Restores serialized state; step count and slots must match the store.
  void load_state(int64_t t, std::map<std::string, Slot> state);

 private:
  ParamStore* store_;
  AdamConfig cfg_;
  Precision precision_;
  int64_t t_ = 0;
  std::map<std::string, Slot> state_;
};

}  // namespace its
