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

#include <cmath>
#include <cstring>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "its/grad_check.hpp"
#include "its/ops.hpp"
#include "its/rng.hpp"
#include "its/tensor.hpp"

using namespace its;
using nlohmann::json;

namespace {

Tensor rand_leaf(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return Tensor::uniform(std::move(shape), CounterRng(seed, "gc-input"), lo, hi, true);
}

// Uniform magnitudes in [0.2, 1.2] with pseudo-random signs: keeps relu and
// l1 test points away from their kinks so central differences are valid.
Tensor rand_leaf_off_kink(Shape shape, uint64_t seed) {
  Tensor t = rand_leaf(shape, seed, 0.2, 1.2);
  CounterRng sign(seed, "gc-sign");
  auto& d = t.mutable_data();
  for (size_t i = 0; i < d.size(); ++i)
    if (sign.bernoulli(i, 0.5)) d[i] = -d[i];
  return t;
}

}  // namespace

TEST_CASE("tensor construction and access") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.shape() == Shape{2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.rank() == 2);
  for (double v : z.data()) CHECK(v == 0.0);

  Tensor f = Tensor::full({2, 2}, 1.5);
  CHECK(f.at({1, 1}) == 1.5);

  Tensor s = Tensor::scalar(4.25);
  CHECK(s.rank() == 0);
  CHECK(s.numel() == 1);
  CHECK(s.item() == 4.25);

  Tensor d = Tensor::from_data({3}, {1.0, 2.0, 3.0});
  CHECK(d.at({2}) == 3.0);
  CHECK_THROWS_AS(Tensor::from_data({4}, {1.0}), Error);
}

TEST_CASE("backward requires scalar loss") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  Tensor y = add(x, x);
  CHECK_THROWS_WITH_AS(y.backward(), doctest::Contains("scalar"), Error);
}

TEST_CASE("backward: sum of squares gives 2x") {
  Tensor x = Tensor::from_data({3}, {1.0, 2.0, 3.0}, true);
  Tensor loss = sum(mul(x, x));
  CHECK(loss.item() == doctest::Approx(14.0));
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
  CHECK(x.grad()[2] == doctest::Approx(6.0));
}

TEST_CASE("backward accumulates into leaves across calls") {
  Tensor x = Tensor::from_data({2}, {1.0, -1.0}, true);
  for (int i = 0; i < 3; ++i) {
    Tensor loss = sum(mul(x, x));
    loss.backward();
  }
  CHECK(x.grad()[0] == doctest::Approx(6.0));  // 3 * 2x
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("gradients off the loss path are exactly zero") {
  Tensor used = Tensor::from_data({2}, {1.0, 2.0}, true);
  Tensor unused = Tensor::from_data({2}, {5.0, 6.0}, true);
  unused.zero_grad();
  Tensor loss = sum(used);
  loss.backward();
  CHECK(unused.grad()[0] == 0.0);
  CHECK(unused.grad()[1] == 0.0);
}

TEST_CASE("requires_grad=false leaves receive no gradient") {
  Tensor frozen = Tensor::from_data({2}, {1.0, 2.0}, false);
  Tensor x = Tensor::from_data({2}, {3.0, 4.0}, true);
  Tensor loss = sum(mul(frozen, x));
  loss.backward();
  CHECK(frozen.grad()[0] == 0.0);
  CHECK(x.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("detach and NoGradGuard stop tracking") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  Tensor y = mul(x, x);
  CHECK(y.requires_grad());
  Tensor z = y.detach();
  CHECK_FALSE(z.requires_grad());
  CHECK(z.data() == y.data());
  {
    NoGradGuard ng;
    Tensor q = mul(x, x);
    CHECK_FALSE(q.requires_grad());
  }
}

TEST_CASE("softplus at zero is ln 2") {
  Tensor y = softplus(Tensor::scalar(0.0));
  CHECK(y.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // Overflow guard: exactly linear far in the right tail.
  CHECK(softplus(Tensor::scalar(50.0)).item() == 50.0);
}

TEST_CASE("layernorm of a constant vector is zeros before affine") {
  Tensor x = Tensor::from_data({4}, {5.0, 5.0, 5.0, 5.0});
  Tensor g = Tensor::full({4}, 1.0);
  Tensor b = Tensor::zeros({4});
  Tensor y = layernorm(x, g, b, 0);
  for (double v : y.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("conv1d length arithmetic: len 8, kernel 3, stride 1, pad 1 -> 8") {
  Tensor x = Tensor::zeros({2, 8});
  Tensor w = Tensor::zeros({3, 2, 3});
  Tensor y = conv1d(x, w, Tensor(), 1, 1);
  CHECK(y.shape() == Shape{3, 8});
}

TEST_CASE("transposed_conv1d length arithmetic: (T-1)*stride + k") {
  Tensor x = Tensor::zeros({2, 5});
  Tensor w = Tensor::zeros({2, 3, 4});
  Tensor y = transposed_conv1d(x, w, Tensor(), 4, 0);
  CHECK(y.shape() == Shape{3, 20});  // (5-1)*4 + 4
}

TEST_CASE("matmul small oracle") {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_data({3, 2}, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b);
  CHECK(c.at({0, 0}) == doctest::Approx(58.0));
  CHECK(c.at({0, 1}) == doctest::Approx(64.0));
  CHECK(c.at({1, 0}) == doctest::Approx(139.0));
  CHECK(c.at({1, 1}) == doctest::Approx(154.0));
}

TEST_CASE("shape mismatch errors name the op and both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 5});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), Error);
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("[2,3]"), Error);
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("[4,5]"), Error);
}

TEST_CASE("cross-entropy of uniform logits is ln(num_classes)") {
  Tensor logits21 = Tensor::zeros({21});
  Tensor l = cross_entropy(logits21, {7});
  CHECK(l.item() == doctest::Approx(std::log(21.0)).epsilon(1e-12));

  // Gradient of the true-class logit at uniform logits, 4 classes: 1/4 - 1.
  Tensor logits4 = Tensor::zeros({4}, true);
  Tensor l4 = cross_entropy(logits4, {2});
  l4.backward();
  CHECK(logits4.grad()[2] == doctest::Approx(0.25 - 1.0).epsilon(1e-12));
  CHECK(logits4.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("cross-entropy decreases monotonically toward 0 with margin") {
  double prev = 1e9;
  for (int m = 0; m <= 12; m += 2) {
    Tensor logits = Tensor::zeros({5});
    logits.mutable_data()[0] = m;
    double v = cross_entropy(logits, {0}).item();
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("KL(N(1,1) || N(0,1)) per element is 0.5") {
  Tensor mu = Tensor::full({3}, 1.0);
  Tensor ls = Tensor::zeros({3});
  CHECK(kl_diag_gaussian(mu, ls).item() == doctest::Approx(0.5).epsilon(1e-12));
  // KL of the standard normal against itself is zero.
  CHECK(kl_diag_gaussian(Tensor::zeros({3}), Tensor::zeros({3})).item() ==
        doctest::Approx(0.0));
}

TEST_CASE("dropout: eval mode is the exact identity") {
  Tensor x = rand_leaf({4, 5}, 11);
  DropoutKey key{123, 2, 7};
  Tensor y = dropout(x, 0.4, key, /*training=*/false);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("dropout: train-mode mask is a function of (seed, layer, step)") {
  Tensor x = Tensor::full({64}, 1.0);
  DropoutKey key{9, 3, 100};
  Tensor a = dropout(x, 0.5, key, true);
  Tensor b = dropout(x, 0.5, key, true);
  CHECK(std::memcmp(a.data().data(), b.data().data(), 64 * sizeof(double)) == 0);

  DropoutKey other{9, 3, 101};
  Tensor c = dropout(x, 0.5, other, true);
  bool differs = false;
  for (int i = 0; i < 64; ++i)
    if (a.data()[i] != c.data()[i]) differs = true;
  CHECK(differs);

  // Kept values are rescaled by 1/(1-rate).
  for (int i = 0; i < 64; ++i)
    CHECK((a.data()[i] == 0.0 || a.data()[i] == doctest::Approx(2.0)));
}

TEST_CASE("repeat_rows repeats in order and sums gradients per source row") {
  Tensor x = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  Tensor y = repeat_rows(x, {2, 0, 3});
  CHECK(y.shape() == Shape{5, 2});
  CHECK(y.at({0, 0}) == 1.0);
  CHECK(y.at({1, 0}) == 1.0);
  CHECK(y.at({2, 0}) == 5.0);
  CHECK(y.at({4, 1}) == 6.0);

  sum(y).backward();
  CHECK(x.grad()[0] == 2.0);  // row 0 used twice
  CHECK(x.grad()[2] == 0.0);  // row 1 dropped
  CHECK(x.grad()[4] == 3.0);  // row 2 used three times

  CHECK_THROWS_AS(repeat_rows(x, {0, 0, 0}), Error);
}

TEST_CASE("gather sums gradients for repeated ids") {
  Tensor table = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  Tensor y = gather_rows(table, {2, 0, 2});
  CHECK(y.shape() == Shape{3, 2});
  CHECK(y.at({0, 0}) == 5.0);
  sum(y).backward();
  CHECK(table.grad()[4] == 2.0);
  CHECK(table.grad()[2] == 0.0);
  CHECK_THROWS_AS(gather_rows(table, {3}), Error);
}

TEST_CASE("concat and slice round-trip") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4}, true);
  Tensor b = Tensor::from_data({2, 3}, {5, 6, 7, 8, 9, 10}, true);
  Tensor c = concat({a, b}, 1);
  CHECK(c.shape() == Shape{2, 5});
  CHECK(c.at({0, 2}) == 5.0);
  CHECK(c.at({1, 4}) == 10.0);
  Tensor back = slice(c, 1, 2, 3);
  for (int64_t i = 0; i < 2; ++i)
    for (int64_t j = 0; j < 3; ++j) CHECK(back.at({i, j}) == b.at({i, j}));
  sum(slice(c, 1, 0, 2)).backward();
  CHECK(a.grad()[0] == 1.0);
  CHECK(b.grad()[0] == 0.0);
}

TEST_CASE("counter rng: reproducible, order-independent, in range") {
  CounterRng r1(42, "stream");
  CounterRng r2(42, "stream");
  CHECK(r1.bits(7) == r2.bits(7));
  double late_first = r1.uniform(1000);
  double early = r1.uniform(3);
  CHECK(r2.uniform(3) == early);          // earlier counter unaffected
  CHECK(r2.uniform(1000) == late_first);  // order does not matter
  for (uint64_t c = 0; c < 1000; ++c) {
    double u = r1.uniform(c);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CounterRng other(43, "stream");
  CHECK(other.bits(7) != r1.bits(7));

  // Box-Muller normals: crude moment sanity on a fixed stream.
  double m = 0.0, m2 = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    double z = r1.normal(static_cast<uint64_t>(i));
    m += z;
    m2 += z * z;
  }
  m /= n;
  m2 /= n;
  CHECK(std::fabs(m) < 0.05);
  CHECK(std::fabs(m2 - 1.0) < 0.1);
}

TEST_CASE("fnv1a known vectors") {
  CHECK(fnv1a(std::string()) == 0xcbf29ce484222325ull);
  CHECK(fnv1a(std::string("a")) == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("grad_check: named spec functions") {
  SUBCASE("softplus-sum") {
    Tensor x = rand_leaf({6}, 101, -2.0, 2.0);
    auto rep = grad_check([&]() { return sum(softplus(x)); }, {x});
    CHECK(rep.max_err < 1e-6);
  }
  SUBCASE("layernorm then sum of squares") {
    Tensor x = rand_leaf({3, 4}, 102);
    Tensor g = rand_leaf({4}, 103, 0.5, 1.5);
    Tensor b = rand_leaf({4}, 104);
    auto rep = grad_check(
        [&]() {
          Tensor y = layernorm(x, g, b, 1);
          return sum(mul(y, y));
        },
        {x, g, b});
    CHECK(rep.max_err < 1e-5);
  }
  SUBCASE("conv2d then mean") {
    Tensor x = rand_leaf({2, 5, 6}, 105);
    Tensor w = rand_leaf({3, 2, 3, 3}, 106);
    Tensor b = rand_leaf({3}, 107);
    auto rep = grad_check([&]() { return mean(conv2d(x, w, b, 2, 1)); }, {x, w, b});
    CHECK(rep.max_err < 1e-5);
  }
}

namespace {

// One grad-check round for a single op kind at the given seed. Mirrors the
// acceptance gradient suite but with fewer seeds; shapes stay tiny.
double op_grad_err(const std::string& kind, uint64_t seed) {
  uint64_t s = seed * 1000;
  auto wsum = [](const Tensor& t, uint64_t ws) {
    // Random weighted sum, so every output coordinate affects the loss.
    Tensor w = Tensor::uniform(t.shape(), CounterRng(ws, "gc-wsum"), 0.5, 1.5);
    return sum(mul(t, w));
  };
  if (kind == "matmul") {
    Tensor a = rand_leaf({3, 4}, s + 1), b = rand_leaf({4, 2}, s + 2);
    return grad_check([&]() { return wsum(matmul(a, b), s); }, {a, b}).max_err;
  }
  if (kind == "add" || kind == "mul" || kind == "mse" || kind == "l1") {
    Tensor a = kind == "l1" ? rand_leaf_off_kink({2, 3}, s + 1) : rand_leaf({2, 3}, s + 1);
    Tensor b = rand_leaf({2, 3}, s + 2);
    auto f = [&]() {
      if (kind == "add") return wsum(add(a, b), s);
      if (kind == "mul") return wsum(mul(a, b), s);
      if (kind == "mse") return mse(a, b);
      return l1(a, b);
    };
    return grad_check(f, {a, b}).max_err;
  }
  if (kind == "conv2d") {
    Tensor x = rand_leaf({2, 5, 5}, s + 1), w = rand_leaf({2, 2, 3, 3}, s + 2),
           b = rand_leaf({2}, s + 3);
    return grad_check([&]() { return wsum(conv2d(x, w, b, 2, 1), s); }, {x, w, b})
        .max_err;
  }
  if (kind == "conv1d") {
    Tensor x = rand_leaf({2, 9}, s + 1), w = rand_leaf({3, 2, 3}, s + 2),
           b = rand_leaf({3}, s + 3);
    return grad_check([&]() { return wsum(conv1d(x, w, b, 1, 2, 2), s); }, {x, w, b})
        .max_err;
  }
  if (kind == "separable_conv1d") {
    Tensor x = rand_leaf({3, 7}, s + 1), dw = rand_leaf({3, 3}, s + 2),
           pw = rand_leaf({2, 3}, s + 3), pb = rand_leaf({2}, s + 4);
    return grad_check([&]() { return wsum(separable_conv1d(x, dw, pw, pb, 1), s); },
                      {x, dw, pw, pb})
        .max_err;
  }
  if (kind == "transposed_conv1d") {
    Tensor x = rand_leaf({2, 4}, s + 1), w = rand_leaf({2, 3, 4}, s + 2),
           b = rand_leaf({3}, s + 3);
    return grad_check([&]() { return wsum(transposed_conv1d(x, w, b, 2, 1), s); },
                      {x, w, b})
        .max_err;
  }
  if (kind == "linear") {
    Tensor x = rand_leaf({3, 4}, s + 1), w = rand_leaf({2, 4}, s + 2),
           b = rand_leaf({2}, s + 3);
    return grad_check([&]() { return wsum(linear(x, w, b), s); }, {x, w, b}).max_err;
  }
  if (kind == "relu") {
    Tensor x = rand_leaf_off_kink({2, 5}, s + 1);
    return grad_check([&]() { return wsum(relu(x), s); }, {x}).max_err;
  }
  if (kind == "softplus" || kind == "sigmoid" || kind == "tanh" || kind == "exp") {
    Tensor x = rand_leaf({2, 5}, s + 1, -1.5, 1.5);
    auto f = [&]() {
      if (kind == "softplus") return wsum(softplus(x), s);
      if (kind == "sigmoid") return wsum(sigmoid(x), s);
      if (kind == "tanh") return wsum(tanh_op(x), s);
      return wsum(exp_op(x), s);
    };
    return grad_check(f, {x}).max_err;
  }
  if (kind == "log1p") {
    Tensor x = rand_leaf({2, 5}, s + 1, -0.5, 2.0);
    return grad_check([&]() { return wsum(log1p_op(x), s); }, {x}).max_err;
  }
  if (kind == "layernorm") {
    Tensor x = rand_leaf({2, 4, 3}, s + 1);
    Tensor g = rand_leaf({4}, s + 2, 0.5, 1.5), b = rand_leaf({4}, s + 3);
    return grad_check([&]() { return wsum(layernorm(x, g, b, 1), s); }, {x, g, b})
        .max_err;
  }
  if (kind == "dropout") {
    // Fixed key => fixed mask => differentiable map.
    Tensor x = rand_leaf({3, 4}, s + 1);
    DropoutKey key{seed, 1, 2};
    return grad_check([&]() { return wsum(dropout(x, 0.3, key, true), s); }, {x})
        .max_err;
  }
  if (kind == "mean_pool") {
    Tensor x = rand_leaf({3, 4, 5}, s + 1);
    return grad_check([&]() { return wsum(mean_pool2d(x), s); }, {x}).max_err;
  }
  if (kind == "cross_entropy") {
    Tensor x = rand_leaf({3, 5}, s + 1, -2.0, 2.0);
    std::vector<int64_t> tgt = {static_cast<int64_t>(seed % 5), 0, 4};
    return grad_check([&]() { return cross_entropy(x, tgt); }, {x}).max_err;
  }
  if (kind == "kl_diag_gaussian_vs_standard_normal") {
    Tensor mu = rand_leaf({6}, s + 1), ls = rand_leaf({6}, s + 2, -0.8, 0.8);
    return grad_check([&]() { return kl_diag_gaussian(mu, ls); }, {mu, ls}).max_err;
  }
  if (kind == "gather") {
    Tensor t = rand_leaf({4, 3}, s + 1);
    std::vector<int64_t> ids = {1, 3, 1, 0};
    return grad_check([&]() { return wsum(gather_rows(t, ids), s); }, {t}).max_err;
  }
  if (kind == "concat") {
    Tensor a = rand_leaf({2, 2}, s + 1), b = rand_leaf({2, 3}, s + 2);
    return grad_check([&]() { return wsum(concat({a, b}, 1), s); }, {a, b}).max_err;
  }
  if (kind == "slice") {
    Tensor x = rand_leaf({3, 5}, s + 1);
    return grad_check([&]() { return wsum(slice(x, 1, 1, 3), s); }, {x}).max_err;
  }
  if (kind == "reshape") {
    Tensor x = rand_leaf({2, 6}, s + 1);
    return grad_check([&]() { return wsum(reshape(x, {3, 4}), s); }, {x}).max_err;
  }
  fail("op_grad_err: no generator for kind \"", kind, "\"");
}

}  // namespace

TEST_CASE("grad_check covers every dispatcher kind (3 seeds each)") {
  for (const std::string& kind : forward_op_kinds()) {
    for (uint64_t seed = 1; seed <= 3; ++seed) {
      double err = op_grad_err(kind, seed);
      INFO(kind << " seed " << seed << " err " << err);
      CHECK(err < 1e-5);
    }
  }
}

TEST_CASE("forward_op dispatcher routes kinds and rejects unknown ones") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
  Tensor y = forward_op("matmul", {a, b}, json::object());
  CHECK(y.at({0, 0}) == doctest::Approx(19.0));

  Tensor x = Tensor::zeros({2, 8});
  Tensor w = Tensor::zeros({3, 2, 3});
  Tensor c = forward_op("conv1d", {x, w}, json{{"stride", 1}, {"pad", 1}});
  CHECK(c.shape() == Shape{3, 8});

  Tensor r = forward_op("reshape", {a}, json{{"shape", {4}}});
  CHECK(r.shape() == Shape{4});

  CHECK_THROWS_WITH_AS(forward_op("frobnicate", {a}, json::object()),
                       doctest::Contains("frobnicate"), Error);
}

TEST_CASE("identical seeds give bit-identical forward and backward") {
  auto run = [](std::vector<double>* loss_and_grads) {
    Tensor x = Tensor::uniform({2, 9}, CounterRng(7, "det-x"), -1.0, 1.0, true);
    Tensor w = Tensor::uniform({3, 2, 3}, CounterRng(7, "det-w"), -0.5, 0.5, true);
    Tensor g = Tensor::full({3}, 1.0, true);
    Tensor b = Tensor::zeros({3}, true);
    Tensor h = layernorm(conv1d(x, w, Tensor(), 1, 1), g, b, 0);
    Tensor loss = mean(mul(h, relu(h)));
    loss.backward();
    loss_and_grads->push_back(loss.item());
    for (const Tensor* t : {&x, &w, &g, &b})
      for (double v : t->grad()) loss_and_grads->push_back(v);
  };
  std::vector<double> a, b;
  run(&a);
  run(&b);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}
