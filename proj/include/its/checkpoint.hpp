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
// Checkpoints are directories: params.tsr1c (named tensors, sorted by name),
// optimizer.tsr1c (Adam first/second moments as "<name>#m"/"<name>#v"), and
// meta.json (stage, step, config hash, seed, frozen set, thread count,
// precision, optimizer step). Save -> load -> continue reproduces the
// no-save trajectory bit-exactly at a fixed thread count.

#pragma once

#include <string>
#include <vector>

#include "its/optim.hpp"

namespace its {

struct CheckpointMeta {
  std::string stage;  // "encoder" | "its" | "tts_baseline"
  int64_t step = 0;
  std::string config_hash;
  uint64_t seed = 0;
  std::vector<std::string> frozen;
  int threads = 1;
  Precision precision = Precision::f64;
  int64_t adam_t = 0;
  // Data-determined model dimensions, so a checkpoint can be reloaded
  // without the corpus manifest it was trained on.
  int image_h = 32;
  int image_w = 96;
  int slots = 26;
  int n_mels = 32;
};

// Writes all three files; `opt` may be null (parameters only).
void save_checkpoint(const std::string& dir, const ParamStore& store, const Adam* opt,
                     const CheckpointMeta& meta);

CheckpointMeta read_checkpoint_meta(const std::string& dir);

// Copies every stored tensor into the same-named parameter (which must exist
// with the same shape). Parameters absent from the file are left untouched,
// so a stage-1 checkpoint can initialize the encoder inside a larger model.
void load_checkpoint_params(const std::string& dir, ParamStore& store);

// Restores Adam moments and step count from optimizer.tsr1c + meta.json.
void load_checkpoint_optimizer(const std::string& dir, Adam& opt);

}  // namespace its
