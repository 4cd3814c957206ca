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

#include "its/grad_check.hpp"

#include <cmath>

namespace its {

GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                           double eps) {
  for (Tensor& l : leaves) {
    l.set_requires_grad(true);
    l.zero_grad();
  }

  Tensor loss = f();
  check(loss.numel() == 1, "grad_check: f must return a scalar, got ",
        shape_str(loss.shape()));
  loss.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const Tensor& l : leaves) analytic.push_back(l.grad());

  auto value = [&]() {
    NoGradGuard ng;
    return f().item();
  };

  GradCheckReport rep;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& data = leaves[li].mutable_data();
    for (size_t i = 0; i < data.size(); ++i) {
      double saved = data[i];
      data[i] = saved + eps;
      double lp = value();
      data[i] = saved - eps;
      double lm = value();
      data[i] = saved;
      double numeric = (lp - lm) / (2.0 * eps);
      double a = analytic[li][i];
      double err = std::fabs(a - numeric) /
                   std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      if (err > rep.max_err) {
        rep.max_err = err;
        rep.worst = cat("leaf ", li, " coord ", i, ": analytic=", a,
                        " numeric=", numeric);
      }
    }
  }
  return rep;
}

}  // namespace its
