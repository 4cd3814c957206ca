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

#include "its/expansion.hpp"

#include <cmath>

namespace its {

DurationPredictor::DurationPredictor(ParamStore& store, const std::string& prefix,
                                     const DurationPredictorConfig& cfg)
    : cfg_(cfg) {
  check(cfg.dim >= 1 && cfg.blocks >= 1 && cfg.kernel >= 1 && cfg.kernel % 2 == 1,
        "duration predictor: bad config dim=", cfg.dim, " blocks=", cfg.blocks,
        " kernel=", cfg.kernel);
  check(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "duration predictor: dropout ",
        cfg.dropout, " outside [0,1)");
  const int D = cfg.dim;
  for (int i = 0; i < cfg.blocks; ++i) {
    auto p = [&](const char* s) { return cat(prefix, "/block", i, "/", s); };
    Block b;
    b.dw = store.add_randn(p("dw"), {D, cfg.kernel},
                           std::sqrt(1.0 / cfg.kernel));
    b.pw = store.add_randn(p("pw"), {D, D}, std::sqrt(2.0 / D));
    b.pb = store.add_zeros(p("pb"), {D});
    b.ln_g = store.add_full(p("ln_g"), {D}, 1.0);
    b.ln_b = store.add_zeros(p("ln_b"), {D});
    blocks_.push_back(std::move(b));
  }
  head_w_ = store.add_randn(cat(prefix, "/head/w"), {1, D}, std::sqrt(1.0 / D));
  head_b_ = store.add_zeros(cat(prefix, "/head/b"), {1});
}

Tensor DurationPredictor::predict(const Tensor& hidden, bool training,
                                  const DropoutKey& key) const {
  check(hidden.rank() == 2 && hidden.dim(1) == cfg_.dim, "predict: hidden shape ",
        shape_str(hidden.shape()), ", expected [L,", cfg_.dim, "]");
  const int pad = (cfg_.kernel - 1) / 2;
  Tensor x = transpose(hidden);  // [D,L]: channels over slots
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    x = separable_conv1d(x, b.dw, b.pw, b.pb, pad);
    x = layernorm(x, b.ln_g, b.ln_b, /*axis=*/0);  // per slot, over channels
    x = relu(x);
    DropoutKey k{key.seed, key.layer + static_cast<int64_t>(i), key.step};
    x = dropout(x, cfg_.dropout, k, training);
  }
  Tensor scalars = linear(transpose(x), head_w_, head_b_);  // [L,1]
  return softplus(reshape(scalars, {hidden.dim(0)}));
}

Tensor duration_loss(const Tensor& pred, const DurationVec& target) {
  check(pred.rank() == 1 && pred.numel() == static_cast<int64_t>(target.size()),
        "duration_loss: pred shape ", shape_str(pred.shape()), " vs ", target.size(),
        " targets");
  std::vector<double> lt(target.size());
  for (size_t i = 0; i < target.size(); ++i) {
    check(target[i] >= 0, "duration_loss: negative target ", target[i], " at slot ", i);
    lt[i] = std::log1p(static_cast<double>(target[i]));
  }
  Tensor log_target = Tensor::from_data({pred.numel()}, std::move(lt));
  Tensor d = add(log1p_op(pred), scale(log_target, -1.0));
  return mean(mul(d, d));
}

DurationVec round_durations(const Tensor& pred) {
  check(pred.rank() == 1, "round_durations: expected 1-D, got ",
        shape_str(pred.shape()));
  DurationVec out(static_cast<size_t>(pred.numel()));
  int64_t total = 0;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    double v = pred.data()[static_cast<size_t>(i)];
    check(v >= 0.0 && std::isfinite(v), "round_durations: bad value ", v, " at slot ",
          i);
    out[static_cast<size_t>(i)] = static_cast<int64_t>(std::floor(v + 0.5));
    total += out[static_cast<size_t>(i)];
  }
  if (total == 0 && !out.empty()) out[0] = 1;  // minimum-length safeguard
  return out;
}

Tensor regulate_length(const Tensor& rows, const DurationVec& durations) {
  check(rows.rank() == 2 && rows.dim(0) == static_cast<int64_t>(durations.size()),
        "regulate_length: ", shape_str(rows.shape()), " rows vs ", durations.size(),
        " durations");
  for (size_t i = 0; i < durations.size(); ++i)
    check(durations[i] >= 0, "regulate_length: negative duration ", durations[i],
          " at slot ", i);
  return repeat_rows(rows, durations);
}

}  // namespace its
