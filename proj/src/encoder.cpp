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

#include "its/encoder.hpp"

#include <cmath>

#include "its/ops.hpp"

namespace its {

namespace {

// He init for relu layers: stddev = sqrt(2 / fan_in).
double he(int64_t fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

// Spatial extent after one stride-2 / pad-1 / kernel-3 convolution.
int64_t conv_out(int64_t n) { return (n - 1) / 2 + 1; }

}  // namespace

ImageEncoder::ImageEncoder(ParamStore& store, const std::string& prefix,
                           const EncoderConfig& cfg)
    : cfg_(cfg) {
  check(cfg.image_h >= 8 && cfg.image_w >= 8, "encoder: image ", cfg.image_h, "x",
        cfg.image_w, " too small for the strided backbone");
  check(cfg.hidden_dim >= 1 && cfg.slots >= 1, "encoder: bad dims D=", cfg.hidden_dim,
        " L=", cfg.slots);
  auto p = [&](const char* s) { return cat(prefix, "/", s); };
  c1w_ = store.add_randn(p("conv1/w"), {16, 1, 3, 3}, he(1 * 9));
  c1b_ = store.add_zeros(p("conv1/b"), {16});
  c2w_ = store.add_randn(p("conv2/w"), {32, 16, 3, 3}, he(16 * 9));
  c2b_ = store.add_zeros(p("conv2/b"), {32});
  c3w_ = store.add_randn(p("conv3/w"), {48, 32, 3, 3}, he(32 * 9));
  c3b_ = store.add_zeros(p("conv3/b"), {48});
  c4w_ = store.add_randn(p("conv4/w"), {48, 48, 3, 3}, he(48 * 9));
  c4b_ = store.add_zeros(p("conv4/b"), {48});
  // Pooling reduces the [48,H',W'] feature map to one global vector. Mean
  // pooling runs over height only; the W' column means are flattened into the
  // pooled vector so left-to-right order survives pooling. The constant
  // matrix pool_ computes the height mean: entry [(h*W'+w), w] = 1/H'.
  pool_h_ = conv_out(conv_out(conv_out(cfg.image_h)));
  pool_w_ = conv_out(conv_out(conv_out(cfg.image_w)));
  std::vector<double> m(static_cast<size_t>(pool_h_) * pool_w_ * pool_w_, 0.0);
  for (int64_t h = 0; h < pool_h_; ++h)
    for (int64_t w = 0; w < pool_w_; ++w)
      m[static_cast<size_t>((h * pool_w_ + w) * pool_w_ + w)] = 1.0 / pool_h_;
  pool_ = Tensor::from_data({pool_h_ * pool_w_, pool_w_}, std::move(m));
  // One [D,P] linear layer per slot (P = pooled dim), stacked into a single
  // [L*D, P] matrix: row block i maps the pooled feature to slot i's hidden
  // vector, exactly as L independent linear layers would.
  const int64_t ld = static_cast<int64_t>(cfg.slots) * cfg.hidden_dim;
  const int64_t pd = 48 * pool_w_;
  slot_w_ = store.add_randn(p("slots/w"), {ld, pd}, he(pd));
  slot_b_ = store.add_zeros(p("slots/b"), {ld});
  cls_w_ = store.add_randn(p("cls/w"), {kNumSymbols, cfg.hidden_dim},
                           std::sqrt(1.0 / cfg.hidden_dim));
  cls_b_ = store.add_zeros(p("cls/b"), {kNumSymbols});
}

Tensor ImageEncoder::encode(const Tensor& image) const {
  check(image.shape() == Shape{1, cfg_.image_h, cfg_.image_w},
        "encode: image shape ", shape_str(image.shape()), ", expected [1,",
        cfg_.image_h, ",", cfg_.image_w, "]");
  Tensor h = relu(conv2d(image, c1w_, c1b_, 1, 1));
  h = relu(conv2d(h, c2w_, c2b_, 2, 1));
  h = relu(conv2d(h, c3w_, c3b_, 2, 1));
  h = relu(conv2d(h, c4w_, c4b_, 2, 1));
  // Height-mean pooling, columns flattened: [48,H',W'] -> [48*W'].
  Tensor pooled = reshape(matmul(reshape(h, {48, pool_h_ * pool_w_}), pool_),
                          {48 * pool_w_});
  Tensor slots = relu(linear(pooled, slot_w_, slot_b_));
  return reshape(slots, {cfg_.slots, cfg_.hidden_dim});
}

Tensor ImageEncoder::classify(const Tensor& hidden) const {
  check(hidden.shape() == Shape{cfg_.slots, cfg_.hidden_dim},
        "classify: hidden shape ", shape_str(hidden.shape()), ", expected [",
        cfg_.slots, ",", cfg_.hidden_dim, "]");
  return linear(hidden, cls_w_, cls_b_);
}

Tensor encoder_loss(const Tensor& logits, const SlotSeq& target) {
  validate_slotseq(target);
  check(logits.rank() == 2 && logits.dim(0) == target.slots() &&
            logits.dim(1) == kNumSymbols,
        "encoder_loss: logits shape ", shape_str(logits.shape()), ", expected [",
        target.slots(), ",", kNumSymbols, "]");
  std::vector<int64_t> ids(target.symbols.begin(), target.symbols.end());
  return cross_entropy(logits, ids);
}

std::vector<int> decode_slots(const Tensor& logits) {
  check(logits.rank() == 2 && logits.dim(1) == kNumSymbols,
        "decode_slots: logits shape ", shape_str(logits.shape()));
  std::vector<int> out;
  const auto& d = logits.data();
  const int64_t L = logits.dim(0), C = logits.dim(1);
  for (int64_t i = 0; i < L; ++i) {
    int best = 0;
    for (int64_t c = 1; c < C; ++c)
      if (d[i * C + c] > d[i * C + best]) best = static_cast<int>(c);
    if (best == kEpsilonId) break;
    out.push_back(best);
  }
  return out;
}

}  // namespace its
