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

#include "its/optim.hpp"

#include <cmath>

namespace its {

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  fail("precision: expected \"f32\" or \"f64\", got \"", s, "\"");
}

std::string precision_to_string(Precision p) {
  return p == Precision::f32 ? "f32" : "f64";
}

Tensor ParamStore::add_param(const std::string& name, Tensor t) {
  check(!name.empty(), "param: empty name");
  check(index_.find(name) == index_.end(), "param \"", name, "\" registered twice");
  t.set_requires_grad(true);
  index_[name] = params_.size();
  params_.push_back(Parameter{name, t, false});
  return t;
}

Tensor ParamStore::add_randn(const std::string& name, Shape shape, double stddev) {
  CounterRng rng(key_combine(seed_, fnv1a(name)));
  return add_param(name, Tensor::randn(std::move(shape), rng, stddev));
}

Tensor ParamStore::add_zeros(const std::string& name, Shape shape) {
  return add_param(name, Tensor::zeros(std::move(shape)));
}

Tensor ParamStore::add_full(const std::string& name, Shape shape, double value) {
  return add_param(name, Tensor::full(std::move(shape), value));
}

bool ParamStore::has(const std::string& name) const {
  return index_.find(name) != index_.end();
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  check(it != index_.end(), "param \"", name, "\" not found");
  return params_[it->second].tensor;
}

Parameter& ParamStore::param(const std::string& name) {
  auto it = index_.find(name);
  check(it != index_.end(), "param \"", name, "\" not found");
  return params_[it->second];
}

void ParamStore::freeze_prefix(const std::string& prefix) {
  size_t hits = 0;
  for (Parameter& p : params_) {
    if (p.name.rfind(prefix, 0) == 0) {
      p.frozen = true;
      p.tensor.set_requires_grad(false);
      ++hits;
    }
  }
  check(hits > 0, "freeze_prefix: no parameter matches \"", prefix, "\"");
}

std::vector<std::string> ParamStore::frozen_names() const {
  std::vector<std::string> out;
  for (const Parameter& p : params_)
    if (p.frozen) out.push_back(p.name);
  return out;
}

void ParamStore::zero_grads() {
  for (Parameter& p : params_) {
    if (p.frozen) continue;
    auto& g = p.tensor.node()->grad;
    g.assign(p.tensor.data().size(), 0.0);
  }
}

int64_t ParamStore::total_elements(bool trainable_only) const {
  int64_t n = 0;
  for (const Parameter& p : params_) {
    if (trainable_only && p.frozen) continue;
    n += p.tensor.numel();
  }
  return n;
}

void ParamStore::snap_f32() {
  for (Parameter& p : params_)
    for (double& v : p.tensor.mutable_data()) v = static_cast<float>(v);
}

Adam::Adam(ParamStore* store, AdamConfig cfg, Precision precision)
    : store_(store), cfg_(cfg), precision_(precision) {
  check(cfg.lr > 0 && cfg.beta1 >= 0 && cfg.beta1 < 1 && cfg.beta2 >= 0 &&
            cfg.beta2 < 1 && cfg.eps > 0,
        "adam: invalid config lr=", cfg.lr, " beta1=", cfg.beta1, " beta2=", cfg.beta2,
        " eps=", cfg.eps);
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Parameter& p : store_->params()) {
    if (p.frozen) continue;
    const auto& g = p.tensor.node()->grad;
    check(!g.empty(), "adam: missing gradient for \"", p.name, "\"");
    Slot& s = state_[p.name];
    if (s.m.empty()) {
      s.m.assign(g.size(), 0.0);
      s.v.assign(g.size(), 0.0);
    }
    auto& w = p.tensor.mutable_data();
    for (size_t i = 0; i < g.size(); ++i) {
      s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g[i];
      s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      double mhat = s.m[i] / bc1;
      double vhat = s.v[i] / bc2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      if (precision_ == Precision::f32) {
        w[i] = static_cast<float>(w[i]);
        s.m[i] = static_cast<float>(s.m[i]);
        s.v[i] = static_cast<float>(s.v[i]);
      }
    }
  }
}

void Adam::load_state(int64_t t, std::map<std::string, Slot> state) {
  check(t >= 0, "adam: negative step count ", t);
  for (const auto& [name, slot] : state) {
    const Parameter& p = store_->param(name);
    check(static_cast<int64_t>(slot.m.size()) == p.tensor.numel() &&
              slot.m.size() == slot.v.size(),
          "adam: state size mismatch for \"", name, "\"");
  }
  t_ = t;
  state_ = std::move(state);
}

}  // namespace its
