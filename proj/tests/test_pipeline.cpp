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

#include "its/train.hpp"

#include <filesystem>
#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "its/checkpoint.hpp"
#include "its/jsonutil.hpp"
#include "its/ops.hpp"
#include "its/serialize.hpp"

namespace fs = std::filesystem;
using namespace its;

namespace {

const fs::path kBase = fs::temp_directory_path() / "its_pipeline_test";

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Small 20-entry corpus (12 train / 4 val / 4 test), built once per run.
const std::string& shared_manifest() {
  static const std::string manifest = [] {
    fs::remove_all(kBase);
    CorpusConfig cfg;
    cfg.out_dir = (kBase / "corpus").string();
    cfg.words = {"cat", "go", "sun", "stand"};
    cfg.samples_per_word = 5;
    cfg.short_word_boost = 1;
    cfg.train_frac = 0.6;
    cfg.val_frac = 0.2;
    cfg.seed = 13;
    build_corpus(cfg);
    return cfg.out_dir + "/manifest.json";
  }();
  return manifest;
}

TrainConfig base_config(const std::string& stage, const std::string& out) {
  TrainConfig cfg;
  cfg.stage = stage;
  cfg.manifest = shared_manifest();
  cfg.out_dir = (kBase / out).string();
  cfg.batch = 4;
  cfg.seed = 21;
  cfg.log_every = 1;
  return cfg;
}

// One deterministic optimizer step on a toy two-parameter store.
void toy_step(ParamStore& store, Adam& opt) {
  store.zero_grads();
  Tensor loss = add(sum(mul(store.get("w"), store.get("w"))), sum(store.get("bias")));
  loss.backward();
  opt.step();
}

std::vector<nlohmann::json> read_log(const fs::path& dir) {
  std::ifstream in(dir / "train_log.jsonl");
  REQUIRE(in.good());
  std::vector<nlohmann::json> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  return lines;
}

}  // namespace

TEST_CASE("checkpoint: parameters, optimizer state, and meta round-trip") {
  shared_manifest();  // ensures kBase exists and is fresh
  const std::string dir = (kBase / "ckpt_toy").string();

  ParamStore a(3);
  a.add_randn("w", {4}, 1.0);
  a.add_randn("bias", {2, 3}, 0.5);
  Adam opt_a(&a, AdamConfig{1e-2}, Precision::f64);
  for (int i = 0; i < 3; ++i) toy_step(a, opt_a);

  CheckpointMeta meta;
  meta.stage = "encoder";
  meta.step = 3;
  meta.config_hash = "cafe";
  meta.seed = 3;
  meta.threads = 1;
  meta.adam_t = opt_a.t();
  save_checkpoint(dir, a, &opt_a, meta);

  const CheckpointMeta back = read_checkpoint_meta(dir);
  CHECK(back.stage == "encoder");
  CHECK(back.step == 3);
  CHECK(back.config_hash == "cafe");
  CHECK(back.seed == 3);
  CHECK(back.adam_t == 3);
  CHECK(back.frozen.empty());

  ParamStore b(99);  // different seed: load must overwrite every value
  b.add_randn("w", {4}, 1.0);
  b.add_randn("bias", {2, 3}, 0.5);
  Adam opt_b(&b, AdamConfig{1e-2}, Precision::f64);
  load_checkpoint_params(dir, b);
  load_checkpoint_optimizer(dir, opt_b);
  CHECK(b.get("w").data() == a.get("w").data());
  CHECK(b.get("bias").data() == a.get("bias").data());
  CHECK(opt_b.t() == opt_a.t());
  REQUIRE(opt_b.state().size() == 2);
  CHECK(opt_b.state().at("w").m == opt_a.state().at("w").m);
  CHECK(opt_b.state().at("w").v == opt_a.state().at("w").v);

  // Continuing from the restored state matches continuing the original.
  toy_step(a, opt_a);
  toy_step(b, opt_b);
  CHECK(b.get("w").data() == a.get("w").data());
  CHECK(b.get("bias").data() == a.get("bias").data());
}

TEST_CASE("checkpoint: loader rejects mismatched stores and tampered files") {
  const std::string dir = (kBase / "ckpt_err").string();
  ParamStore a(3);
  a.add_randn("w", {4}, 1.0);
  a.add_randn("bias", {2, 3}, 0.5);
  Adam opt(&a, AdamConfig{1e-2}, Precision::f64);
  toy_step(a, opt);
  save_checkpoint(dir, a, &opt, CheckpointMeta{});

  ParamStore missing(3);
  missing.add_randn("w", {4}, 1.0);
  CHECK_THROWS_AS(load_checkpoint_params(dir, missing), Error);

  ParamStore wrong_shape(3);
  wrong_shape.add_randn("w", {5}, 1.0);
  wrong_shape.add_randn("bias", {2, 3}, 0.5);
  CHECK_THROWS_AS(load_checkpoint_params(dir, wrong_shape), Error);

  // Unknown meta key.
  nlohmann::json meta_json = load_json_file(dir + "/meta.json");
  meta_json["extra"] = 1;
  save_json_file(dir + "/meta.json", meta_json);
  CHECK_THROWS_AS(read_checkpoint_meta(dir), Error);
  meta_json.erase("extra");
  save_json_file(dir + "/meta.json", meta_json);

  // Malformed optimizer records.
  ParamStore c(3);
  c.add_randn("w", {4}, 1.0);
  c.add_randn("bias", {2, 3}, 0.5);
  Adam opt_c(&c, AdamConfig{1e-2}, Precision::f64);
  write_tsr1c_file(dir + "/optimizer.tsr1c", {{"w#x", Tensor::zeros({4})}}, Precision::f64);
  CHECK_THROWS_AS(load_checkpoint_optimizer(dir, opt_c), Error);
  write_tsr1c_file(dir + "/optimizer.tsr1c", {{"w#m", Tensor::zeros({4})}}, Precision::f64);
  CHECK_THROWS_AS(load_checkpoint_optimizer(dir, opt_c), Error);
}

TEST_CASE("checkpoint: f32 precision round-trips bit-exactly") {
  const std::string dir = (kBase / "ckpt_f32").string();
  ParamStore a(3);
  a.add_randn("w", {4}, 1.0);
  a.add_randn("bias", {2, 3}, 0.5);
  a.snap_f32();
  Adam opt(&a, AdamConfig{1e-2}, Precision::f32);
  for (int i = 0; i < 2; ++i) toy_step(a, opt);

  CheckpointMeta meta;
  meta.precision = Precision::f32;
  meta.adam_t = opt.t();
  save_checkpoint(dir, a, &opt, meta);

  ParamStore b(3);
  b.add_randn("w", {4}, 1.0);
  b.add_randn("bias", {2, 3}, 0.5);
  Adam opt_b(&b, AdamConfig{1e-2}, Precision::f32);
  load_checkpoint_params(dir, b);
  load_checkpoint_optimizer(dir, opt_b);
  CHECK(b.get("w").data() == a.get("w").data());
  CHECK(opt_b.state().at("bias").v == opt.state().at("bias").v);
}

TEST_CASE("train config: strict keys, defaults, and round-trip") {
  nlohmann::json j{{"stage", "encoder"}, {"manifest", "m.json"}, {"out_dir", "out"}};
  TrainConfig cfg = train_config_from_json(j);
  CHECK(cfg.stage == "encoder");
  CHECK(cfg.steps == 1000);
  CHECK(cfg.batch == 8);
  CHECK(cfg.lr == 1e-3);
  CHECK(cfg.precision == Precision::f64);

  j["steps"] = 7;
  j["precision"] = "f32";
  j["w_mel"] = 0.5;
  cfg = train_config_from_json(j);
  CHECK(cfg.steps == 7);
  CHECK(cfg.precision == Precision::f32);
  CHECK(cfg.w_mel == 0.5);

  const TrainConfig round = train_config_from_json(train_config_to_json(cfg));
  CHECK(round.stage == cfg.stage);
  CHECK(round.steps == cfg.steps);
  CHECK(round.precision == cfg.precision);
  CHECK(round.w_mel == cfg.w_mel);

  nlohmann::json bad = j;
  bad["typo_key"] = 1;
  CHECK_THROWS_AS(train_config_from_json(bad), Error);
  nlohmann::json bad_stage = j;
  bad_stage["stage"] = "diffusion";
  CHECK_THROWS_AS(train_config_from_json(bad_stage), Error);
}

TEST_CASE("training: encoder stage logs, checkpoints, and reduces the loss") {
  TrainConfig cfg = base_config("encoder", "enc_run");
  cfg.steps = 40;
  const TrainResult res = run_training(cfg);
  CHECK(res.steps == 40);
  CHECK(res.metrics.count("slot_accuracy") == 1);

  const std::vector<nlohmann::json> log = read_log(cfg.out_dir);
  REQUIRE(log.size() == 41);  // one per step plus the val line
  CHECK(log.front().at("step") == 1);
  CHECK(log[39].at("step") == 40);
  CHECK(log.back().contains("val"));
  // 40 steps must visibly reduce the classification loss from its ~ln(21)
  // starting point.
  CHECK(log[39].at("loss").get<double>() < log.front().at("loss").get<double>());

  const CheckpointMeta meta = read_checkpoint_meta(cfg.out_dir);
  CHECK(meta.stage == "encoder");
  CHECK(meta.step == 40);
  CHECK(meta.adam_t == 40);
  CHECK(meta.frozen.empty());
  CHECK(fs::exists(fs::path(cfg.out_dir) / "params.tsr1c"));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "optimizer.tsr1c"));
}

TEST_CASE("training: identical configs give byte-identical checkpoints") {
  TrainConfig cfg = base_config("tts_baseline", "tts_a");
  cfg.steps = 6;
  run_training(cfg);
  TrainConfig cfg2 = base_config("tts_baseline", "tts_b");
  cfg2.steps = 6;
  run_training(cfg2);
  CHECK(read_bytes(fs::path(cfg.out_dir) / "params.tsr1c") ==
        read_bytes(fs::path(cfg2.out_dir) / "params.tsr1c"));
  CHECK(read_bytes(fs::path(cfg.out_dir) / "optimizer.tsr1c") ==
        read_bytes(fs::path(cfg2.out_dir) / "optimizer.tsr1c"));
}

TEST_CASE("training: save/resume matches an uninterrupted run bit-exactly") {
  TrainConfig half = base_config("tts_baseline", "tts_half");
  half.steps = 3;
  run_training(half);

  TrainConfig resumed = base_config("tts_baseline", "tts_resumed");
  resumed.steps = 6;
  resumed.init = half.out_dir;
  const TrainResult res = run_training(resumed);
  CHECK(res.steps == 3);  // 3 incremental steps on top of the loaded 3

  // tts_a above ran the same config for 6 uninterrupted steps.
  CHECK(read_bytes(fs::path(resumed.out_dir) / "params.tsr1c") ==
        read_bytes(kBase / "tts_a" / "params.tsr1c"));
  CHECK(read_bytes(fs::path(resumed.out_dir) / "optimizer.tsr1c") ==
        read_bytes(kBase / "tts_a" / "optimizer.tsr1c"));
  CHECK(read_checkpoint_meta(resumed.out_dir).step == 6);
  CHECK(read_checkpoint_meta(resumed.out_dir).adam_t == 6);
}

TEST_CASE("training: zero steps writes the initialization unchanged") {
  TrainConfig cfg = base_config("tts_baseline", "tts_zero");
  cfg.steps = 0;
  const TrainResult res = run_training(cfg);
  CHECK(res.steps == 0);
  CHECK(res.final_loss == 0.0);
  CHECK(res.metrics.count("eps_zero_rate") == 1);

  const LoadedCorpus corpus = load_corpus(shared_manifest());
  ModelConfig mcfg;
  mcfg.encoder.image_h = corpus.manifest.image_h;
  mcfg.encoder.image_w = corpus.manifest.image_w;
  mcfg.encoder.slots = corpus.manifest.slots;
  mcfg.melgen.n_mels = corpus.manifest.audio.n_mels;
  ParamStore fresh(cfg.seed);
  TtsBaseline tts(fresh, mcfg);
  ParamStore loaded(cfg.seed);
  TtsBaseline tts2(loaded, mcfg);
  load_checkpoint_params(cfg.out_dir, loaded);
  for (const Parameter& p : fresh.params())
    CHECK(p.tensor.data() == loaded.get(p.name).data());
}

TEST_CASE("training: stage its requires and freezes the encoder checkpoint") {
  TrainConfig enc = base_config("encoder", "its_enc");
  enc.steps = 5;
  run_training(enc);

  TrainConfig its = base_config("its", "its_run");
  its.steps = 4;
  its.init = enc.out_dir;
  const TrainResult res = run_training(its);
  CHECK(res.steps == 4);
  CHECK(res.metrics.count("eps_zero_rate") == 1);
  CHECK(res.metrics.count("within2_rate") == 1);
  CHECK(res.metrics.at("mel_l1") > 0.0);

  const CheckpointMeta meta = read_checkpoint_meta(its.out_dir);
  CHECK(meta.stage == "its");
  CHECK(!meta.frozen.empty());
  for (const std::string& name : meta.frozen) CHECK(name.rfind("encoder/", 0) == 0);

  // Every frozen encoder parameter is bit-identical to the stage-1 value.
  Precision dtype = Precision::f64;
  std::map<std::string, std::vector<double>> stage1;
  for (const NamedTensor& r : read_tsr1c_file(enc.out_dir + "/params.tsr1c", &dtype))
    stage1[r.name] = r.tensor.data();
  int encoder_records = 0;
  bool any_trained_changed = false;
  ParamStore fresh(its.seed);
  LoadedCorpus corpus = load_corpus(shared_manifest());
  ModelConfig mcfg;
  mcfg.encoder.image_h = corpus.manifest.image_h;
  mcfg.encoder.image_w = corpus.manifest.image_w;
  mcfg.encoder.slots = corpus.manifest.slots;
  mcfg.melgen.n_mels = corpus.manifest.audio.n_mels;
  E2eModel fresh_model(fresh, mcfg);
  for (const NamedTensor& r : read_tsr1c_file(its.out_dir + "/params.tsr1c")) {
    if (r.name.rfind("encoder/", 0) == 0) {
      ++encoder_records;
      CHECK(r.tensor.data() == stage1.at(r.name));
    } else if (r.tensor.data() != fresh.get(r.name).data()) {
      any_trained_changed = true;
    }
  }
  CHECK(encoder_records == static_cast<int>(stage1.size()));
  CHECK(any_trained_changed);

  TrainConfig no_init = base_config("its", "its_bad");
  CHECK_THROWS_AS(run_training(no_init), Error);
  TrainConfig wrong_init = base_config("tts_baseline", "tts_bad");
  wrong_init.init = its.out_dir;  // "its" checkpoint into "tts_baseline"
  CHECK_THROWS_AS(run_training(wrong_init), Error);
}

TEST_CASE("training: runaway learning rate aborts instead of emitting NaNs") {
  TrainConfig cfg = base_config("tts_baseline", "tts_nan");
  cfg.steps = 12;
  cfg.lr = 1e8;
  CHECK_THROWS_AS(run_training(cfg), Error);
}
