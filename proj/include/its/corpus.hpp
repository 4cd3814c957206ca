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
// Synthetic corpus: rendered word images paired with oracle Mel-spectrograms
// and exact durations, split train/val/test per word, written as TSR1 files
// plus a manifest.json (schema in docs/formats.md). All per-entry randomness
// derives from (seed, entry index), so generation order never matters.

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "its/audio.hpp"
#include "its/phoneme.hpp"
#include "its/tensor.hpp"

namespace its {

struct CorpusConfig {
  std::string out_dir;
  std::vector<std::string> words;  // defaults to the curated lexicon words
  int samples_per_word = 10;
  int short_word_boost = 3;      // sample multiplier for short words
  int short_word_threshold = 4;  // "short" = fewer phonemes than this
  int slots = kDefaultSlots;
  double speed_min = 0.7;
  double speed_max = 1.4;
  double train_frac = 0.8;
  double val_frac = 0.1;  // remainder is test
  int image_h = 32;
  int image_w = 96;
  double noise = 0.05;
  int jitter = 2;
  int n_fonts = 3;
  uint64_t seed = 1;
  AudioConfig audio;
};

CorpusConfig corpus_config_from_json(const nlohmann::json& j);
nlohmann::json corpus_config_to_json(const CorpusConfig& cfg);
// FNV-1a over the canonical JSON form (out_dir excluded): the identity of
// the data, not of its location.
uint64_t corpus_config_hash(const CorpusConfig& cfg);

struct CorpusEntry {
  std::string image_path;  // relative to the manifest directory
  std::string mel_path;
  std::string word;
  std::vector<int> phonemes;  // the N non-ε ids
  DurationVec durations;      // length L with the ε tail zeros
  std::string split;          // "train" | "val" | "test"
  double speed = 1.0;
  int font = 0;
};

struct CorpusManifest {
  std::string dir;  // directory containing manifest.json
  uint64_t seed = 0;
  std::string config_hash;
  int slots = kDefaultSlots;
  AudioConfig audio;
  int image_h = 0;
  int image_w = 0;
  std::vector<CorpusEntry> entries;
};

// Renders every sample, synthesizes oracle Mels, writes TSR1 tensors and
// manifest.json under cfg.out_dir, and returns the manifest.
CorpusManifest build_corpus(const CorpusConfig& cfg);

CorpusManifest load_manifest(const std::string& manifest_path);

struct CorpusItem {
  Tensor image;  // [1, H, W]
  Tensor mel;    // [n_mels, T]
  SlotSeq slotseq;
};

// Manifest plus all tensors in memory; items[i] pairs with manifest.entries[i].
struct LoadedCorpus {
  CorpusManifest manifest;
  std::vector<CorpusItem> items;

  std::vector<size_t> split_indices(const std::string& split) const;
};

// Loads and (by default) validates every entry's invariants: tail-ε layout,
// duration sums matching Mel lengths, tensor shapes matching the manifest.
LoadedCorpus load_corpus(const std::string& manifest_path, bool validate = true);

}  // namespace its
