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

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <doctest.h>

#include "its/ops.hpp"
#include "its/optim.hpp"
#include "its/serialize.hpp"

using namespace its;

TEST_CASE("param store: named registration, order-independent init") {
  ParamStore a(77), b(77);
  Tensor w1 = a.add_randn("m/w", {4, 3}, 0.1);
  Tensor b1 = a.add_zeros("m/b", {3});
  // Opposite registration order, same names and seed.
  Tensor b2 = b.add_zeros("m/b", {3});
  Tensor w2 = b.add_randn("m/w", {4, 3}, 0.1);
  CHECK(w1.data() == w2.data());
  CHECK(b1.data() == b2.data());
  CHECK(w1.requires_grad());
  CHECK(a.total_elements() == 15);
  CHECK_THROWS_AS(a.add_zeros("m/w", {1}), Error);
  CHECK_THROWS_AS(a.get("nope"), Error);

  ParamStore c(78);
  Tensor w3 = c.add_randn("m/w", {4, 3}, 0.1);
  CHECK(w3.data() != w1.data());
}

TEST_CASE("adam: first step is about -lr * sign(g)") {
  ParamStore store(1);
  Tensor w = store.add_full("w", {3}, 0.0);
  Adam opt(&store, AdamConfig{.lr = 0.01}, Precision::f64);
  store.zero_grads();
  Tensor loss = sum(mul(w, Tensor::from_data({3}, {2.0, -3.0, 0.5})));
  loss.backward();
  opt.step();
  CHECK(w.data()[0] == doctest::Approx(-0.01).epsilon(1e-4));
  CHECK(w.data()[1] == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(w.data()[2] == doctest::Approx(-0.01).epsilon(1e-4));
}

TEST_CASE("adam: frozen params untouched, missing grads rejected") {
  ParamStore store(2);
  Tensor w = store.add_full("enc/w", {2}, 1.0);
  Tensor v = store.add_full("head/w", {2}, 1.0);
  store.freeze_prefix("enc/");
  CHECK_FALSE(w.requires_grad());
  CHECK(store.frozen_names() == std::vector<std::string>{"enc/w"});
  CHECK(store.total_elements(true) == 2);
  CHECK_THROWS_AS(store.freeze_prefix("zzz/"), Error);

  Adam opt(&store, AdamConfig{}, Precision::f64);
  SUBCASE("missing gradient is an error") {
    CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("head/w"), Error);
  }
  SUBCASE("frozen stays exactly put") {
    store.zero_grads();
    Tensor loss = sum(add(mul(w, w), mul(v, v)));
    loss.backward();
    opt.step();
    CHECK(w.data()[0] == 1.0);
    CHECK(v.data()[0] != 1.0);
  }
}

TEST_CASE("adam: zero gradients are a fixed point") {
  ParamStore store(3);
  Tensor w = store.add_full("w", {2}, 0.5);
  Adam opt(&store, AdamConfig{}, Precision::f64);
  for (int i = 0; i < 2; ++i) {
    store.zero_grads();
    opt.step();
  }
  CHECK(w.data()[0] == 0.5);
  CHECK(w.data()[1] == 0.5);
  CHECK(opt.t() == 2);
}

TEST_CASE("f32 precision snaps parameters and optimizer state") {
  ParamStore store(4);
  Tensor w = store.add_randn("w", {8}, 0.3);
  Adam opt(&store, AdamConfig{.lr = 0.05}, Precision::f32);
  store.zero_grads();
  sum(mul(w, w)).backward();
  opt.step();
  for (double x : w.data()) CHECK(x == static_cast<double>(static_cast<float>(x)));
  for (const auto& [name, slot] : opt.state()) {
    (void)name;
    for (double m : slot.m) CHECK(m == static_cast<double>(static_cast<float>(m)));
    for (double v2 : slot.v) CHECK(v2 == static_cast<double>(static_cast<float>(v2)));
  }
}

TEST_CASE("tsr1: stream round-trip preserves shape and bits") {
  Tensor t = Tensor::uniform({3, 2, 4}, CounterRng(5, "ser"), -2.0, 2.0);
  std::stringstream ss;
  write_tsr1(ss, t, Precision::f64);
  Precision dt;
  Tensor back = read_tsr1(ss, &dt);
  CHECK(dt == Precision::f64);
  CHECK(back.shape() == t.shape());
  CHECK(std::memcmp(back.data().data(), t.data().data(),
                    sizeof(double) * static_cast<size_t>(t.numel())) == 0);
}

TEST_CASE("tsr1: f32 round-trip is exact for f32-snapped values") {
  Tensor t = Tensor::uniform({5}, CounterRng(6, "ser"), -1.0, 1.0);
  for (double& v : t.mutable_data()) v = static_cast<float>(v);
  std::stringstream ss;
  write_tsr1(ss, t, Precision::f32);
  Tensor back = read_tsr1(ss);
  CHECK(back.data() == t.data());
}

TEST_CASE("tsr1: header layout is byte-exact") {
  Tensor t = Tensor::from_data({2}, {1.0, -1.0});
  std::stringstream ss;
  write_tsr1(ss, t, Precision::f32);
  std::string bytes = ss.str();
  REQUIRE(bytes.size() == 4 + 1 + 1 + 8 + 2 * 4);
  CHECK(bytes.substr(0, 4) == "TSR1");
  CHECK(bytes[4] == 0);  // f32
  CHECK(bytes[5] == 1);  // rank
  CHECK(static_cast<unsigned char>(bytes[6]) == 2);  // extent LSB
  for (int i = 7; i < 14; ++i) CHECK(bytes[i] == 0);
}

TEST_CASE("tsr1: corrupt inputs rejected") {
  std::stringstream bad("XSR1junk");
  CHECK_THROWS_WITH_AS(read_tsr1(bad), doctest::Contains("magic"), Error);
  std::stringstream trunc("TSR1");
  CHECK_THROWS_AS(read_tsr1(trunc), Error);
}

TEST_CASE("tsr1c: named container round-trip") {
  auto dir = std::filesystem::temp_directory_path() / "its_tsr1c_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "params.tsr1c").string();

  std::vector<NamedTensor> recs;
  recs.push_back({"enc/w", Tensor::uniform({4, 4}, CounterRng(7, "c0"), -1, 1)});
  recs.push_back({"enc/b", Tensor::zeros({4})});
  recs.push_back({"head/w", Tensor::uniform({2, 4}, CounterRng(7, "c1"), -1, 1)});
  write_tsr1c_file(path, recs, Precision::f64);

  auto back = read_tsr1c_file(path);
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].name == recs[i].name);
    CHECK(back[i].tensor.shape() == recs[i].tensor.shape());
    CHECK(back[i].tensor.data() == recs[i].tensor.data());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("optimizer state survives a save/load cycle bit-exactly") {
  auto train = [](int pre_steps, bool round_trip, std::vector<double>* out) {
    ParamStore store(9);
    Tensor w = store.add_randn("w", {6}, 0.2);
    Adam opt(&store, AdamConfig{.lr = 0.02}, Precision::f32);
    auto one_step = [&]() {
      store.zero_grads();
      Tensor target = Tensor::full({6}, 0.7);
      mse(w, target).backward();
      opt.step();
    };
    for (int i = 0; i < pre_steps; ++i) one_step();
    if (round_trip) {
      // Serialize params + state through TSR1 streams, reload into new objects.
      std::stringstream ps, ms, vs;
      write_tsr1(ps, w, Precision::f32);
      write_tsr1(ms, Tensor::from_data({6}, opt.state().at("w").m), Precision::f32);
      write_tsr1(vs, Tensor::from_data({6}, opt.state().at("w").v), Precision::f32);
      ParamStore store2(9);
      Tensor w2 = store2.add_randn("w", {6}, 0.2);
      w2.mutable_data() = read_tsr1(ps).data();
      Adam opt2(&store2, AdamConfig{.lr = 0.02}, Precision::f32);
      std::map<std::string, Adam::Slot> st;
      st["w"] = {read_tsr1(ms).data(), read_tsr1(vs).data()};
      opt2.load_state(opt.t(), std::move(st));
      store2.zero_grads();
      Tensor target = Tensor::full({6}, 0.7);
      mse(w2, target).backward();
      opt2.step();
      *out = w2.data();
      return;
    }
    one_step();
    *out = w.data();
  };
  std::vector<double> direct, reloaded;
  train(3, false, &direct);
  train(3, true, &reloaded);
  CHECK(direct == reloaded);
}
