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

#include <functional>
#include <string>
#include <vector>

#include "its/tensor.hpp"

namespace its {

struct GradCheckReport {
  double max_err = 0.0;  // max over coordinates of the relative error below
  std::string worst;     // human-readable location of the max
};

// Compares reverse-mode gradients of the scalar produced by `f` against
// central finite differences in the given leaves. `f` must rebuild its graph
// on every call and read the leaves' current values. Per-coordinate error is
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
// with numeric = (f(x+eps) - f(x-eps)) / (2 eps).
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                           double eps = 1e-5);

}  // namespace its
