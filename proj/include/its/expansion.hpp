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
// Duration predictor and length regulator. The predictor has a dual task:
// emit a positive frame count for every phoneme slot and (near-)zero for
// every ε slot, so no separate ε-recognition head is needed. The regulator
// repeats each slot's vector by its duration, which makes ε slots vanish
// from the frame-rate sequence. Training uses ground-truth durations for
// expansion (teacher forcing); rounded predictions are inference-only.

#pragma once

#include <string>

#include "its/ops.hpp"
#include "its/optim.hpp"
#include "its/phoneme.hpp"

namespace its {

struct DurationPredictorConfig {
  int dim = 64;         // channel width; must equal the HiddenSeq dim
  int kernel = 3;
  int blocks = 2;
  double dropout = 0.1;
};

class DurationPredictor {
 public:
  DurationPredictor(ParamStore& store, const std::string& prefix,
                    const DurationPredictorConfig& cfg);

  // [L,D] hidden vectors -> [L] non-negative durations (softplus output).
  // Each block is a time-wise separable convolution (depthwise k-tap plus
  // 1x1 pointwise), layernorm over channels, relu, dropout. Dropout masks
  // for block i use layer id key.layer + i; eval mode is deterministic.
  Tensor predict(const Tensor& hidden, bool training, const DropoutKey& key) const;

  const DurationPredictorConfig& config() const { return cfg_; }

 private:
  struct Block {
    Tensor dw, pw, pb;  // depthwise [D,k], pointwise [D,D], bias [D]
    Tensor ln_g, ln_b;
  };
  DurationPredictorConfig cfg_;
  std::vector<Block> blocks_;
  Tensor head_w_, head_b_;  // [1,D] linear head before softplus
};

// Mean over slots of squared log1p error: mean_i (log1p(pred_i) -
// log1p(target_i))^2. ε slots (target 0) carry the same weight as phonemes,
// which is what pushes their predictions to zero.
Tensor duration_loss(const Tensor& pred, const DurationVec& target);

// Element-wise round-half-up; if every slot rounds to 0, slot 0 is forced to
// 1 so the expanded sequence is never empty.
DurationVec round_durations(const Tensor& pred);

// Row i of `rows` repeated durations[i] times, in slot order. The output has
// sum(durations) rows; rows with duration 0 vanish and receive zero
// gradient. Errors on all-zero durations (apply round_durations first).
Tensor regulate_length(const Tensor& rows, const DurationVec& durations);

}  // namespace its
