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
// Training stages. "encoder" fits the slot classifier with cross-entropy
// (stage 1). "its" loads a stage-1 checkpoint, freezes the encoder, and fits
// the duration predictor, projection, and Mel generator jointly against
// teacher-forced expansion (stage 2). "tts_baseline" trains the embedding-
// input synthesis stack the same way, from text instead of frozen image
// features. Every random choice (epoch shuffles, dropout masks, VAE noise)
// is a pure function of the seed and the global step, so a run resumed from
// a checkpoint is bit-identical to one that never stopped.

#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "its/checkpoint.hpp"
#include "its/corpus.hpp"
#include "its/models.hpp"
#include "its/optim.hpp"

namespace its {

struct TrainConfig {
  std::string stage;     // "encoder" | "its" | "tts_baseline"
  std::string manifest;  // corpus manifest.json
  std::string out_dir;   // receives the checkpoint and train_log.jsonl
  std::string init;      // checkpoint dir: same-stage -> resume (parameters,
                         // optimizer, step); "encoder" under stage "its" ->
                         // frozen-encoder initialization (required there)
  int64_t steps = 1000;  // total optimizer steps (resume counts from init)
  int batch = 8;
  double lr = 1e-3;
  uint64_t seed = 1;
  double w_dur = 1.0;  // duration-loss weight (stages "its"/"tts_baseline")
  double w_mel = 1.0;  // Mel-loss weight
  Precision precision = Precision::f64;
  int64_t log_every = 50;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

// Architecture dimensions are fixed; the data-determined sizes (image
// geometry, slot count, Mel bands) come from the corpus manifest, or from a
// checkpoint's recorded copy of them.
ModelConfig model_config_for(const CorpusManifest& m);
ModelConfig model_config_from_meta(const CheckpointMeta& meta);

struct TrainResult {
  int64_t steps = 0;       // optimizer steps actually run this invocation
  double final_loss = 0.0;  // mean item loss of the last step (0 if none ran)
  std::map<std::string, double> metrics;  // validation metrics at the end
};

// Runs the configured stage start to finish: loads the corpus, trains,
// writes out_dir/train_log.jsonl (one JSON object per logged step), and
// saves a checkpoint into out_dir. Aborts with an error if a loss turns
// non-finite.
TrainResult run_training(const TrainConfig& cfg);

// Fraction of items whose decoded slots match the reference in every slot.
double slot_exact_accuracy(const ImageEncoder& enc, const LoadedCorpus& corpus,
                           const std::vector<size_t>& indices);

struct DurationMetrics {
  double eps_zero_rate = 0.0;  // ε slots with rounded prediction exactly 0
  double within2_rate = 0.0;   // phoneme slots within ±2 frames of target
  double mel_l1 = 0.0;         // prior-mean reconstruction under teacher
                               // durations, mean absolute error
};

DurationMetrics duration_metrics_e2e(const E2eModel& model, const LoadedCorpus& corpus,
                                     const std::vector<size_t>& indices);
DurationMetrics duration_metrics_tts(const TtsBaseline& tts, const LoadedCorpus& corpus,
                                     const std::vector<size_t>& indices);

}  // namespace its
