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
// Image encoder: a strided CNN backbone pools a word image into one global
// feature vector, per-slot linear+relu layers turn it into L hidden vectors
// (one per output slot), and a shared classifier scores each slot over the
// phoneme inventory plus ε. Words shorter than L slots are supervised to
// emit ε in the tail. Pooling runs over height only and flattens the column
// means into the pooled vector, so left-to-right order survives pooling.

#pragma once

#include <vector>

#include "its/optim.hpp"
#include "its/phoneme.hpp"
#include "its/tensor.hpp"

namespace its {

struct EncoderConfig {
  int image_h = 32;
  int image_w = 96;
  int hidden_dim = 64;       // D, per-slot hidden width
  int slots = kDefaultSlots; // L
};

class ImageEncoder {
 public:
  // Registers parameters under "<prefix>/..." in the store.
  ImageEncoder(ParamStore& store, const std::string& prefix, const EncoderConfig& cfg);

  // [1,H,W] image -> [L,D] per-slot hidden vectors. Fully deterministic.
  Tensor encode(const Tensor& image) const;

  // [L,D] -> [L,P+1] logits through the shared slot classifier.
  Tensor classify(const Tensor& hidden) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Tensor c1w_, c1b_, c2w_, c2b_, c3w_, c3b_, c4w_, c4b_;  // backbone convs
  Tensor pool_;             // constant height-mean pooling matrix
  int64_t pool_h_ = 0, pool_w_ = 0;  // feature-map extent before pooling
  Tensor slot_w_, slot_b_;  // [L*D, Cp]: row block i is slot i's linear layer
  Tensor cls_w_, cls_b_;    // shared [P+1, D] classifier
};

// Mean over the L slots of per-slot cross-entropy against the padded target
// ids; ε slots count with weight 1 like any phoneme.
Tensor encoder_loss(const Tensor& logits, const SlotSeq& target);

// Per-slot argmax truncated at the first ε (the tail-padding convention);
// an empty result is a valid outcome.
std::vector<int> decode_slots(const Tensor& logits);

}  // namespace its
