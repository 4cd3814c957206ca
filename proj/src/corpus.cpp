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

#include "its/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "its/g2p.hpp"
#include "its/jsonutil.hpp"
#include "its/mel_oracle.hpp"
#include "its/render.hpp"
#include "its/serialize.hpp"

namespace fs = std::filesystem;

namespace its {

using nlohmann::json;

namespace {

json audio_to_json(const AudioConfig& a) {
  return json{{"sample_rate", a.sample_rate},
              {"frame_size", a.frame_size},
              {"hop", a.hop},
              {"n_mels", a.n_mels}};
}

AudioConfig audio_from_json(const json& j) {
  check_allowed_keys(j, {"sample_rate", "frame_size", "hop", "n_mels"}, "audio config");
  AudioConfig a;
  a.sample_rate = json_get_or(j, "sample_rate", a.sample_rate);
  a.frame_size = json_get_or(j, "frame_size", a.frame_size);
  a.hop = json_get_or(j, "hop", a.hop);
  a.n_mels = json_get_or(j, "n_mels", a.n_mels);
  return a;
}

}  // namespace

CorpusConfig corpus_config_from_json(const json& j) {
  check_allowed_keys(j,
                     {"out_dir", "words", "samples_per_word", "short_word_boost",
                      "short_word_threshold", "slots", "speed_min", "speed_max",
                      "train_frac", "val_frac", "image_h", "image_w", "noise",
                      "jitter", "n_fonts", "seed", "audio"},
                     "corpus config");
  CorpusConfig c;
  c.out_dir = json_get_or(j, "out_dir", c.out_dir);
  c.words = json_get_or(j, "words", g2p_lexicon_words());
  c.samples_per_word = json_get_or(j, "samples_per_word", c.samples_per_word);
  c.short_word_boost = json_get_or(j, "short_word_boost", c.short_word_boost);
  c.short_word_threshold = json_get_or(j, "short_word_threshold", c.short_word_threshold);
  c.slots = json_get_or(j, "slots", c.slots);
  c.speed_min = json_get_or(j, "speed_min", c.speed_min);
  c.speed_max = json_get_or(j, "speed_max", c.speed_max);
  c.train_frac = json_get_or(j, "train_frac", c.train_frac);
  c.val_frac = json_get_or(j, "val_frac", c.val_frac);
  c.image_h = json_get_or(j, "image_h", c.image_h);
  c.image_w = json_get_or(j, "image_w", c.image_w);
  c.noise = json_get_or(j, "noise", c.noise);
  c.jitter = json_get_or(j, "jitter", c.jitter);
  c.n_fonts = json_get_or(j, "n_fonts", c.n_fonts);
  c.seed = json_get_or(j, "seed", c.seed);
  if (j.contains("audio")) c.audio = audio_from_json(j.at("audio"));
  return c;
}

json corpus_config_to_json(const CorpusConfig& c) {
  return json{{"out_dir", c.out_dir},
              {"words", c.words},
              {"samples_per_word", c.samples_per_word},
              {"short_word_boost", c.short_word_boost},
              {"short_word_threshold", c.short_word_threshold},
              {"slots", c.slots},
              {"speed_min", c.speed_min},
              {"speed_max", c.speed_max},
              {"train_frac", c.train_frac},
              {"val_frac", c.val_frac},
              {"image_h", c.image_h},
              {"image_w", c.image_w},
              {"noise", c.noise},
              {"jitter", c.jitter},
              {"n_fonts", c.n_fonts},
              {"seed", c.seed},
              {"audio", audio_to_json(c.audio)}};
}

uint64_t corpus_config_hash(const CorpusConfig& c) {
  json j = corpus_config_to_json(c);
  j.erase("out_dir");
  return fnv1a(j.dump());
}

namespace {

void validate_config(const CorpusConfig& c) {
  check(!c.words.empty(), "corpus: empty word list");
  check(!c.out_dir.empty(), "corpus: out_dir not set");
  check(c.samples_per_word >= 1 && c.short_word_boost >= 1, "corpus: bad sample counts");
  check(c.speed_min >= 0.5 && c.speed_max <= 2.0 && c.speed_min <= c.speed_max,
        "corpus: speed range [", c.speed_min, ",", c.speed_max,
        "] outside [0.5,2.0]");
  check(c.train_frac > 0 && c.val_frac >= 0 && c.train_frac + c.val_frac < 1.0,
        "corpus: bad split fractions train=", c.train_frac, " val=", c.val_frac);
  check(c.n_fonts >= 1 && c.n_fonts <= kNumFonts, "corpus: n_fonts ", c.n_fonts,
        " outside [1,", kNumFonts, "]");
  check(c.slots >= 1, "corpus: bad slot count ", c.slots);
}

json entry_to_json(const CorpusEntry& e) {
  return json{{"image", e.image_path},   {"mel", e.mel_path},
              {"word", e.word},          {"phonemes", e.phonemes},
              {"durations", e.durations},{"split", e.split},
              {"speed", e.speed},        {"font", e.font}};
}

CorpusEntry entry_from_json(const json& j) {
  check_allowed_keys(
      j, {"image", "mel", "word", "phonemes", "durations", "split", "speed", "font"},
      "manifest entry");
  CorpusEntry e;
  e.image_path = j.at("image").get<std::string>();
  e.mel_path = j.at("mel").get<std::string>();
  e.word = j.at("word").get<std::string>();
  e.phonemes = j.at("phonemes").get<std::vector<int>>();
  e.durations = j.at("durations").get<DurationVec>();
  e.split = j.at("split").get<std::string>();
  e.speed = j.at("speed").get<double>();
  e.font = j.at("font").get<int>();
  check(e.split == "train" || e.split == "val" || e.split == "test",
        "manifest entry: unknown split \"", e.split, "\"");
  return e;
}

}  // namespace

CorpusManifest build_corpus(const CorpusConfig& cfg) {
  validate_config(cfg);
  fs::path root(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(root / "img", ec);
  fs::create_directories(root / "mel", ec);
  check(fs::is_directory(root / "img") && fs::is_directory(root / "mel"),
        "corpus: cannot create output directories under \"", cfg.out_dir, "\"");

  CorpusManifest man;
  man.dir = root.string();
  man.seed = cfg.seed;
  man.config_hash = hex64(corpus_config_hash(cfg));
  man.slots = cfg.slots;
  man.audio = cfg.audio;
  man.image_h = cfg.image_h;
  man.image_w = cfg.image_w;

  RenderConfig rc{cfg.image_h, cfg.image_w, cfg.noise, cfg.jitter};
  int64_t entry_index = 0;
  for (const std::string& word : cfg.words) {
    std::vector<int> phonemes = g2p_lookup(word, cfg.slots);
    bool short_word = static_cast<int>(phonemes.size()) < cfg.short_word_threshold;
    int count = cfg.samples_per_word * (short_word ? cfg.short_word_boost : 1);
    int n_train = static_cast<int>(std::lround(count * cfg.train_frac));
    int n_val = static_cast<int>(std::lround(count * cfg.val_frac));
    check(n_train >= 1 && n_train + n_val < count, "corpus: word \"", word,
          "\" sample count ", count, " too small for the splits");
    for (int s = 0; s < count; ++s, ++entry_index) {
      CounterRng rng(cfg.seed, "corpus-entry", static_cast<uint64_t>(entry_index));
      CorpusEntry e;
      e.word = word;
      e.phonemes = phonemes;
      e.font = static_cast<int>(rng.below(0, static_cast<uint64_t>(cfg.n_fonts)));
      double bg = rng.uniform(1);
      // Contrast of at least 0.4 between ink and background.
      double fg = bg > 0.5 ? rng.uniform(2, 0.0, bg - 0.4) : rng.uniform(2, bg + 0.4, 1.0);
      e.speed = rng.uniform(3, cfg.speed_min, cfg.speed_max);
      uint64_t noise_seed = rng.bits(4);
      e.split = s < n_train ? "train" : (s < n_train + n_val ? "val" : "test");

      Tensor image = render_word_image(word, e.font, fg, bg, noise_seed, rc);
      OracleMel om = synth_oracle_mel(phonemes, e.speed, cfg.audio.n_mels, cfg.slots);
      e.durations = std::move(om.durations);

      char base[32];
      std::snprintf(base, sizeof base, "%06lld", static_cast<long long>(entry_index));
      e.image_path = cat("img/", base, ".tsr1");
      e.mel_path = cat("mel/", base, ".tsr1");
      write_tsr1_file((root / e.image_path).string(), image, Precision::f32);
      write_tsr1_file((root / e.mel_path).string(), om.mel, Precision::f64);
      man.entries.push_back(std::move(e));
    }
  }

  json j{{"seed", man.seed},
         {"config_hash", man.config_hash},
         {"slots", man.slots},
         {"audio", audio_to_json(man.audio)},
         {"image", json{{"h", man.image_h}, {"w", man.image_w}, {"c", 1}}},
         {"entries", json::array()}};
  for (const CorpusEntry& e : man.entries) j["entries"].push_back(entry_to_json(e));
  save_json_file((root / "manifest.json").string(), j);
  return man;
}

CorpusManifest load_manifest(const std::string& manifest_path) {
  json j = load_json_file(manifest_path);
  check_allowed_keys(j, {"seed", "config_hash", "slots", "audio", "image", "entries"},
                     "manifest");
  CorpusManifest man;
  man.dir = fs::path(manifest_path).parent_path().string();
  man.seed = j.at("seed").get<uint64_t>();
  man.config_hash = j.at("config_hash").get<std::string>();
  man.slots = j.at("slots").get<int>();
  man.audio = audio_from_json(j.at("audio"));
  man.image_h = j.at("image").at("h").get<int>();
  man.image_w = j.at("image").at("w").get<int>();
  for (const json& ej : j.at("entries")) man.entries.push_back(entry_from_json(ej));
  return man;
}

std::vector<size_t> LoadedCorpus::split_indices(const std::string& split) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < manifest.entries.size(); ++i)
    if (manifest.entries[i].split == split) out.push_back(i);
  return out;
}

LoadedCorpus load_corpus(const std::string& manifest_path, bool validate) {
  LoadedCorpus lc;
  lc.manifest = load_manifest(manifest_path);
  fs::path root(lc.manifest.dir);
  lc.items.reserve(lc.manifest.entries.size());
  for (const CorpusEntry& e : lc.manifest.entries) {
    CorpusItem item;
    item.image = read_tsr1_file((root / e.image_path).string());
    item.mel = read_tsr1_file((root / e.mel_path).string());
    item.slotseq = pad_to_slots(e.phonemes, lc.manifest.slots);
    if (validate) {
      check(item.image.shape() ==
                Shape{1, lc.manifest.image_h, lc.manifest.image_w},
            "corpus: image shape ", shape_str(item.image.shape()),
            " does not match manifest for \"", e.image_path, "\"");
      check(item.mel.rank() == 2 && item.mel.dim(0) == lc.manifest.audio.n_mels,
            "corpus: mel shape ", shape_str(item.mel.shape()),
            " does not match manifest for \"", e.mel_path, "\"");
      validate_durations(item.slotseq, e.durations, item.mel.dim(1));
      for (double v : item.mel.data())
        check(std::isfinite(v), "corpus: non-finite mel value in \"", e.mel_path, "\"");
    }
    lc.items.push_back(std::move(item));
  }
  return lc;
}

}  // namespace its
