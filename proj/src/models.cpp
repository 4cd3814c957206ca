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

#include "its/models.hpp"

#include <cmath>

namespace its {

namespace {

// Shared tail of both models: durations from hidden vectors, projection,
// expansion, prior-latent decode.
SynthesisResult synth_from_hidden(const Tensor& hidden, const DurationPredictor& dur,
                                  const Tensor& proj_w, const Tensor& proj_b,
                                  const MelGenerator& gen, uint64_t prior_seed,
                                  bool sample) {
  SynthesisResult r;
  r.raw_durations = dur.predict(hidden, /*training=*/false, DropoutKey{});
  r.durations = round_durations(r.raw_durations);
  Tensor projected = linear(hidden, proj_w, proj_b);
  Tensor expanded = regulate_length(projected, r.durations);
  const int64_t t_latent = (expanded.dim(0) + 3) / 4;
  Tensor z = sample ? gen.sample_prior(t_latent, prior_seed) : gen.prior_mean(t_latent);
  r.mel = gen.decode(z, expanded);
  return r;
}

}  // namespace

E2eModel::E2eModel(ParamStore& store, const ModelConfig& cfg)
    : cfg_(cfg),
      encoder_(store, "encoder", cfg.encoder),
      duration_(store, "dur", cfg.duration),
      melgen_(store, "melgen", cfg.melgen) {
  check(cfg.duration.dim == cfg.encoder.hidden_dim,
        "model: duration predictor dim ", cfg.duration.dim,
        " != encoder hidden dim ", cfg.encoder.hidden_dim);
  proj_w_ = store.add_randn("proj/w", {cfg.melgen.cond_dim, cfg.encoder.hidden_dim},
                            std::sqrt(1.0 / cfg.encoder.hidden_dim));
  proj_b_ = store.add_zeros("proj/b", {cfg.melgen.cond_dim});
}

Tensor E2eModel::project(const Tensor& hidden) const {
  return linear(hidden, proj_w_, proj_b_);
}

SynthesisResult E2eModel::synthesize(const Tensor& image, uint64_t prior_seed,
                                     bool sample) const {
  NoGradGuard ng;
  Tensor hidden = encoder_.encode(image);
  // No classifier pass: the end-to-end system never materializes text. A
  // readout is available separately via encoder().classify() when wanted.
  return synth_from_hidden(hidden, duration_, proj_w_, proj_b_, melgen_,
                           prior_seed, sample);
}

TtsBaseline::TtsBaseline(ParamStore& store, const ModelConfig& cfg)
    : cfg_(cfg),
      duration_(store, "dur", cfg.duration),
      melgen_(store, "melgen", cfg.melgen) {
  const int D = cfg.duration.dim;
  embed_ = store.add_randn("tts/embed", {kNumSymbols, D}, std::sqrt(1.0 / D));
  proj_w_ = store.add_randn("proj/w", {cfg.melgen.cond_dim, D}, std::sqrt(1.0 / D));
  proj_b_ = store.add_zeros("proj/b", {cfg.melgen.cond_dim});
}

Tensor TtsBaseline::embed(const SlotSeq& s) const {
  validate_slotseq(s);
  std::vector<int64_t> ids(s.symbols.begin(), s.symbols.end());
  return gather_rows(embed_, ids);
}

Tensor TtsBaseline::project(const Tensor& hidden) const {
  return linear(hidden, proj_w_, proj_b_);
}

SynthesisResult TtsBaseline::synthesize(const SlotSeq& s, uint64_t prior_seed,
                                        bool sample) const {
  NoGradGuard ng;
  return synth_from_hidden(embed(s), duration_, proj_w_, proj_b_, melgen_, prior_seed,
                           sample);
}

SynthesisResult synthesize_non_e2e(const ImageEncoder& itt, const TtsBaseline& tts,
                                   const Tensor& image, uint64_t prior_seed,
                                   bool sample) {
  NoGradGuard ng;
  Tensor hidden = itt.encode(image);
  std::vector<int> phonemes = decode_slots(itt.classify(hidden));
  check(!phonemes.empty(), "pipeline: no text recognized");
  SlotSeq s = pad_to_slots(phonemes, itt.config().slots);
  SynthesisResult r = tts.synthesize(s, prior_seed, sample);
  r.phonemes = std::move(phonemes);
  return r;
}

}  // namespace its
