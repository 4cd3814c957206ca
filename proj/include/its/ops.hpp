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
// Differentiable op catalogue. Layout conventions: images are [C,H,W],
// 1-D feature sequences are [C,T], matrices are row-major [rows,cols].

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "its/tensor.hpp"

namespace its {

// Dropout masks come from a counter rng keyed by (seed, layer, step), so a
// given (layer, step) pair always sees the same mask.
struct DropoutKey {
  uint64_t seed = 0;
  int64_t layer = 0;
  int64_t step = 0;
};

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);  // 2-D

// x: [in] or [N,in]; w: [out,in]; b: [out] or undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor exp_op(const Tensor& x);
Tensor log1p_op(const Tensor& x);

// Normalizes over `axis`; gamma/beta are 1-D of that extent.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, int axis);

Tensor dropout(const Tensor& x, double rate, const DropoutKey& key, bool training);

// x: [C,H,W]; w: [O,C,kh,kw]; b: [O] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
// x: [C,T]; w: [O,C,k]; b: [O] or undefined.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad,
              int dilation = 1);
// x: [C,T]; w: [C,k]; b: [C] or undefined. One filter per channel.
Tensor depthwise_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad);
// Depthwise k-tap then pointwise 1x1: dw [C,k], pw [O,C], pb [O] or undefined.
Tensor separable_conv1d(const Tensor& x, const Tensor& dw, const Tensor& pw,
                        const Tensor& pb, int pad);
// x: [C,T]; w: [C,O,k]; out length (T-1)*stride + k - 2*pad.
Tensor transposed_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                         int pad = 0);

Tensor mean_pool2d(const Tensor& x);  // [C,H,W] -> [C], global spatial mean

// logits: [C] or [N,C]; one target per row; mean over rows.
Tensor cross_entropy(const Tensor& logits, const std::vector<int64_t>& targets);
Tensor mse(const Tensor& a, const Tensor& b);
Tensor l1(const Tensor& a, const Tensor& b);
// Mean over elements of KL(N(mu, e^{2 log_sigma}) || N(0, 1)).
Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& log_sigma);

Tensor gather_rows(const Tensor& table, const std::vector<int64_t>& ids);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, int64_t start, int64_t len);
Tensor reshape(const Tensor& x, Shape shape);

// Row i of x repeated counts[i] times, in order. Backward is a segment sum.
Tensor repeat_rows(const Tensor& x, const std::vector<int64_t>& counts);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// String-keyed dispatch over every supported kind; throws on unknown kinds.
// Attrs are a json object (stride, pad, targets, ...).
Tensor forward_op(const std::string& kind, const std::vector<Tensor>& inputs,
                  const nlohmann::json& attrs);
const std::vector<std::string>& forward_op_kinds();

}  // namespace its
