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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <utility>

#include "its/checkpoint.hpp"
#include "its/common.hpp"
#include "its/jsonutil.hpp"
#include "its/ops.hpp"
#include "its/parallel.hpp"
#include "its/rng.hpp"

namespace its {
namespace {

bool valid_stage(const std::string& s) {
  return s == "encoder" || s == "its" || s == "tts_baseline";
}

// Visiting order for global item position g: epoch g/n uses a fresh
// Fisher-Yates permutation keyed by (seed, "epoch", epoch), so the order is
// a pure function of g and a resumed run replays the schedule exactly.
class EpochSchedule {
 public:
  EpochSchedule(std::vector<size_t> base, uint64_t seed)
      : base_(std::move(base)), seed_(seed) {}

  size_t at(uint64_t global) {
    const uint64_t epoch = global / base_.size();
    if (!have_ || epoch != epoch_) {
      order_ = base_;
      shuffle(order_, CounterRng(seed_, "epoch", epoch));
      epoch_ = epoch;
      have_ = true;
    }
    return order_[global % base_.size()];
  }

 private:
  std::vector<size_t> base_, order_;
  uint64_t seed_;
  uint64_t epoch_ = 0;
  bool have_ = false;
};

DurationMetrics duration_metrics_impl(
    const std::function<Tensor(const CorpusItem&)>& hidden_fn,
    const DurationPredictor& dp, const std::function<Tensor(const Tensor&)>& project_fn,
    const MelGenerator& mg, const LoadedCorpus& corpus, const std::vector<size_t>& indices) {
  check(!indices.empty(), "duration_metrics: empty index list");
  NoGradGuard no_grad;
  int64_t eps_total = 0, eps_zero = 0, ph_total = 0, ph_within = 0;
  double l1_sum = 0.0;
  int64_t l1_count = 0;
  for (size_t i : indices) {
    const CorpusItem& item = corpus.items[i];
    const DurationVec& target = corpus.manifest.entries[i].durations;
    const Tensor hidden = hidden_fn(item);
    const DurationVec rounded = round_durations(dp.predict(hidden, false, DropoutKey{}));
    for (size_t s = 0; s < target.size(); ++s) {
      if (target[s] == 0) {
        ++eps_total;
        eps_zero += rounded[s] == 0 ? 1 : 0;
      } else {
        ++ph_total;
        ph_within += std::llabs(rounded[s] - target[s]) <= 2 ? 1 : 0;
      }
    }
    const Tensor frames = regulate_length(project_fn(hidden), target);
    const int64_t t_latent = (item.mel.dim(1) + 3) / 4;
    const Tensor mel_hat = mg.decode(mg.prior_mean(t_latent), frames);
    const std::vector<double>& a = mel_hat.data();
    const std::vector<double>& b = item.mel.data();
    for (size_t n = 0; n < a.size(); ++n) l1_sum += std::abs(a[n] - b[n]);
    l1_count += static_cast<int64_t>(a.size());
  }
  DurationMetrics m;
  m.eps_zero_rate = eps_total > 0 ? static_cast<double>(eps_zero) / eps_total : 1.0;
  m.within2_rate = ph_total > 0 ? static_cast<double>(ph_within) / ph_total : 1.0;
  m.mel_l1 = l1_sum / l1_count;
  return m;
}

}  // namespace

ModelConfig model_config_for(const CorpusManifest& m) {
  ModelConfig cfg;
  cfg.encoder.image_h = m.image_h;
  cfg.encoder.image_w = m.image_w;
  cfg.encoder.slots = m.slots;
  cfg.melgen.n_mels = m.audio.n_mels;
  return cfg;
}

ModelConfig model_config_from_meta(const CheckpointMeta& meta) {
  ModelConfig cfg;
  cfg.encoder.image_h = meta.image_h;
  cfg.encoder.image_w = meta.image_w;
  cfg.encoder.slots = meta.slots;
  cfg.melgen.n_mels = meta.n_mels;
  return cfg;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  check_allowed_keys(j,
                     {"stage", "manifest", "out_dir", "init", "steps", "batch", "lr", "seed",
                      "w_dur", "w_mel", "precision", "log_every"},
                     "train config");
  TrainConfig cfg;
  cfg.stage = j.at("stage").get<std::string>();
  check(valid_stage(cfg.stage), "train config: unknown stage \"", cfg.stage, "\"");
  cfg.manifest = j.at("manifest").get<std::string>();
  cfg.out_dir = j.at("out_dir").get<std::string>();
  cfg.init = json_get_or<std::string>(j, "init", cfg.init);
  cfg.steps = json_get_or<int64_t>(j, "steps", cfg.steps);
  cfg.batch = json_get_or<int>(j, "batch", cfg.batch);
  cfg.lr = json_get_or<double>(j, "lr", cfg.lr);
  cfg.seed = json_get_or<uint64_t>(j, "seed", cfg.seed);
  cfg.w_dur = json_get_or<double>(j, "w_dur", cfg.w_dur);
  cfg.w_mel = json_get_or<double>(j, "w_mel", cfg.w_mel);
  cfg.precision = precision_from_string(json_get_or<std::string>(j, "precision", "f64"));
  cfg.log_every = json_get_or<int64_t>(j, "log_every", cfg.log_every);
  return cfg;
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["stage"] = cfg.stage;
  j["manifest"] = cfg.manifest;
  j["out_dir"] = cfg.out_dir;
  j["init"] = cfg.init;
  j["steps"] = cfg.steps;
  j["batch"] = cfg.batch;
  j["lr"] = cfg.lr;
  j["seed"] = cfg.seed;
  j["w_dur"] = cfg.w_dur;
  j["w_mel"] = cfg.w_mel;
  j["precision"] = precision_to_string(cfg.precision);
  j["log_every"] = cfg.log_every;
  return j;
}

TrainResult run_training(const TrainConfig& cfg) {
  check(valid_stage(cfg.stage), "train: unknown stage \"", cfg.stage, "\"");
  check(cfg.steps >= 0, "train: steps must be >= 0, got ", cfg.steps);
  check(cfg.batch >= 1, "train: batch must be >= 1, got ", cfg.batch);
  check(cfg.lr > 0.0, "train: lr must be positive");
  check(cfg.log_every >= 1, "train: log_every must be >= 1");
  check(!cfg.out_dir.empty(), "train: out_dir is required");
  check(cfg.stage != "its" || !cfg.init.empty(),
        "train: stage \"its\" requires an init encoder checkpoint");

  const LoadedCorpus corpus = load_corpus(cfg.manifest);
  const std::vector<size_t> train_idx = corpus.split_indices("train");
  const std::vector<size_t> val_idx = corpus.split_indices("val");
  check(!train_idx.empty(), "train: corpus has no train split");
  check(!val_idx.empty(), "train: corpus has no val split");

  const ModelConfig mcfg = model_config_for(corpus.manifest);
  ParamStore store(cfg.seed);
  std::unique_ptr<ImageEncoder> enc;
  std::unique_ptr<E2eModel> e2e;
  std::unique_ptr<TtsBaseline> tts;
  if (cfg.stage == "encoder") {
    enc = std::make_unique<ImageEncoder>(store, "encoder", mcfg.encoder);
  } else if (cfg.stage == "its") {
    e2e = std::make_unique<E2eModel>(store, mcfg);
  } else {
    tts = std::make_unique<TtsBaseline>(store, mcfg);
  }
  if (cfg.precision == Precision::f32) store.snap_f32();

  Adam opt(&store, AdamConfig{cfg.lr}, cfg.precision);
  int64_t start_step = 0;
  if (!cfg.init.empty()) {
    const CheckpointMeta init_meta = read_checkpoint_meta(cfg.init);
    if (init_meta.stage == cfg.stage) {
      // Same-stage checkpoint: full resume.
      load_checkpoint_params(cfg.init, store);
      load_checkpoint_optimizer(cfg.init, opt);
      start_step = init_meta.step;
    } else {
      check(cfg.stage == "its" && init_meta.stage == "encoder", "train: stage \"", cfg.stage,
            "\" cannot initialize from a \"", init_meta.stage, "\" checkpoint");
      load_checkpoint_params(cfg.init, store);
    }
  }
  if (cfg.stage == "its") store.freeze_prefix("encoder/");

  // The frozen encoder's features never change, so compute them once.
  std::vector<Tensor> hidden_cache;
  if (e2e) {
    NoGradGuard no_grad;
    hidden_cache.resize(corpus.items.size());
    for (size_t i : train_idx) hidden_cache[i] = e2e->encoder().encode(corpus.items[i].image);
  }

  // Per-item loss; graphs are built and backpropagated one item at a time
  // with a 1/batch scale, which accumulates the same mean-loss gradient as a
  // padded batch would.
  const auto item_loss = [&](size_t i, int64_t step, int b, double klw, double* dur_out,
                             double* mel_out) -> Tensor {
    const CorpusItem& item = corpus.items[i];
    if (enc) return encoder_loss(enc->classify(enc->encode(item.image)), item.slotseq);

    Tensor hidden, cond;
    const DurationPredictor* dp = nullptr;
    const MelGenerator* mg = nullptr;
    if (e2e) {
      hidden = hidden_cache[i];
      cond = e2e->project(hidden);
      dp = &e2e->duration();
      mg = &e2e->melgen();
    } else {
      hidden = tts->embed(item.slotseq);
      cond = tts->project(hidden);
      dp = &tts->duration();
      mg = &tts->melgen();
    }
    const DurationVec& durations = corpus.manifest.entries[i].durations;
    // Disjoint dropout-layer ranges give every batch slot its own mask while
    // keeping the key a pure function of (seed, b, step).
    const Tensor pred =
        dp->predict(hidden, true, DropoutKey{cfg.seed, static_cast<int64_t>(b) * 16, step});
    const Tensor dl = duration_loss(pred, durations);
    const Tensor frames = regulate_length(cond, durations);  // teacher forcing
    const PosteriorParams post = mg->encode(item.mel, frames);
    const uint64_t draw = static_cast<uint64_t>(step) * cfg.batch + b;
    const Tensor mel_hat = mg->decode(mg->sample_posterior(post, cfg.seed, draw), frames);
    const Tensor ml = melgen_loss(mel_hat, item.mel, post, klw);
    *dur_out = dl.item();
    *mel_out = ml.item();
    return add(scale(dl, cfg.w_dur), scale(ml, cfg.w_mel));
  };

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  check(!ec, "train: cannot create out_dir \"", cfg.out_dir, "\": ", ec.message());
  std::ofstream log(cfg.out_dir + "/train_log.jsonl", std::ios::app);
  check(log.is_open(), "train: cannot open \"", cfg.out_dir, "/train_log.jsonl\"");

  EpochSchedule sched(train_idx, cfg.seed);
  TrainResult result;
  for (int64_t step = start_step; step < cfg.steps; ++step) {
    store.zero_grads();
    const double klw = enc ? 0.0 : kl_weight_at(mcfg.melgen, step, cfg.steps);
    double loss_sum = 0.0, dur_sum = 0.0, mel_sum = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      const size_t i = sched.at(static_cast<uint64_t>(step) * cfg.batch + b);
      double dl = 0.0, ml = 0.0;
      const Tensor loss = item_loss(i, step, b, klw, &dl, &ml);
      loss_sum += loss.item();
      dur_sum += dl;
      mel_sum += ml;
      scale(loss, 1.0 / cfg.batch).backward();
    }
    const double mean_loss = loss_sum / cfg.batch;
    check(std::isfinite(mean_loss), "train: non-finite loss at step ", step + 1, " (stage \"",
          cfg.stage, "\")");
    opt.step();
    ++result.steps;
    result.final_loss = mean_loss;
    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps) {
      nlohmann::json line{{"step", step + 1}, {"loss", mean_loss}};
      if (!enc) {
        line["dur_loss"] = dur_sum / cfg.batch;
        line["mel_loss"] = mel_sum / cfg.batch;
        line["kl_weight"] = klw;
      }
      log << line.dump() << "\n" << std::flush;
    }
  }

  if (enc) {
    result.metrics["slot_accuracy"] = slot_exact_accuracy(*enc, corpus, val_idx);
  } else {
    const DurationMetrics m = e2e ? duration_metrics_e2e(*e2e, corpus, val_idx)
                                  : duration_metrics_tts(*tts, corpus, val_idx);
    result.metrics["eps_zero_rate"] = m.eps_zero_rate;
    result.metrics["within2_rate"] = m.within2_rate;
    result.metrics["mel_l1"] = m.mel_l1;
  }
  log << nlohmann::json{{"step", start_step + result.steps}, {"val", result.metrics}}.dump() << "\n"
      << std::flush;

  CheckpointMeta meta;
  meta.stage = cfg.stage;
  meta.step = start_step + result.steps;
  meta.config_hash = corpus.manifest.config_hash;
  meta.seed = cfg.seed;
  meta.frozen = store.frozen_names();
  meta.threads = thread_count();
  meta.precision = cfg.precision;
  meta.adam_t = opt.t();
  meta.image_h = mcfg.encoder.image_h;
  meta.image_w = mcfg.encoder.image_w;
  meta.slots = mcfg.encoder.slots;
  meta.n_mels = mcfg.melgen.n_mels;
  save_checkpoint(cfg.out_dir, store, &opt, meta);
  return result;
}

double slot_exact_accuracy(const ImageEncoder& enc, const LoadedCorpus& corpus,
                           const std::vector<size_t>& indices) {
  check(!indices.empty(), "slot_exact_accuracy: empty index list");
  NoGradGuard no_grad;
  int64_t hits = 0;
  for (size_t i : indices) {
    const CorpusItem& item = corpus.items[i];
    const Tensor logits = enc.classify(enc.encode(item.image));
    bool all = true;
    for (int s = 0; s < item.slotseq.slots() && all; ++s) {
      int best = 0;
      double best_v = logits.at({s, 0});
      for (int c = 1; c < kNumSymbols; ++c) {
        const double v = logits.at({s, c});
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      all = best == item.slotseq.symbols[s];
    }
    hits += all ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

DurationMetrics duration_metrics_e2e(const E2eModel& model, const LoadedCorpus& corpus,
                                     const std::vector<size_t>& indices) {
  NoGradGuard no_grad;
  return duration_metrics_impl(
      [&](const CorpusItem& item) { return model.encoder().encode(item.image); },
      model.duration(), [&](const Tensor& h) { return model.project(h); }, model.melgen(), corpus,
      indices);
}

DurationMetrics duration_metrics_tts(const TtsBaseline& tts, const LoadedCorpus& corpus,
                                     const std::vector<size_t>& indices) {
  NoGradGuard no_grad;
  return duration_metrics_impl([&](const CorpusItem& item) { return tts.embed(item.slotseq); },
                               tts.duration(), [&](const Tensor& h) { return tts.project(h); },
                               tts.melgen(), corpus, indices);
}

}  // namespace its
