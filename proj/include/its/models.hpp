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
// Model assemblies. E2eModel runs image -> slots -> durations -> expansion
// -> Mel in one differentiable stack (the end-to-end system). TtsBaseline is
// the synthesis half of the two-stage pipeline: a phoneme embedding table in
// place of the image encoder, with the identical expansion and Mel generator
// downstream. The two-stage pipeline itself is the stage-1 encoder used as a
// recognizer (argmax decode, a non-differentiable seam) feeding TtsBaseline.

#pragma once

#include <string>
#include <vector>

#include "its/encoder.hpp"
#include "its/expansion.hpp"
#include "its/melgen.hpp"

namespace its {

struct ModelConfig {
  EncoderConfig encoder;
  DurationPredictorConfig duration;
  MelGenConfig melgen;
};

struct SynthesisResult {
  Tensor mel;                 // [F, T] with T == sum(durations)
  DurationVec durations;      // rounded predictions, length L
  Tensor raw_durations;       // [L] pre-rounding softplus outputs
  std::vector<int> phonemes;  // recognizer readout; set only by the two-stage
                              // pipeline, which materializes text mid-way
};

class E2eModel {
 public:
  E2eModel(ParamStore& store, const ModelConfig& cfg);

  const ImageEncoder& encoder() const { return encoder_; }
  const DurationPredictor& duration() const { return duration_; }
  const MelGenerator& melgen() const { return melgen_; }
  const ModelConfig& config() const { return cfg_; }

  // [L,D] -> [L,D'] linear map feeding the Mel generator's condition input.
  Tensor project(const Tensor& hidden) const;

  // Deterministic inference: encode, predict+round durations, expand, decode
  // with the prior-mean latent (or a seeded prior sample when sample=true).
  SynthesisResult synthesize(const Tensor& image, uint64_t prior_seed = 0,
                             bool sample = false) const;

 private:
  ModelConfig cfg_;
  ImageEncoder encoder_;
  DurationPredictor duration_;
  MelGenerator melgen_;
  Tensor proj_w_, proj_b_;
};

class TtsBaseline {
 public:
  TtsBaseline(ParamStore& store, const ModelConfig& cfg);

  const DurationPredictor& duration() const { return duration_; }
  const MelGenerator& melgen() const { return melgen_; }
  const ModelConfig& config() const { return cfg_; }
  const Tensor& embedding_table() const { return embed_; }

  // Padded slot ids -> [L,D] embeddings; the ε embedding (id 0) is a trained
  // row like any other and must learn to map to duration 0.
  Tensor embed(const SlotSeq& s) const;
  Tensor project(const Tensor& hidden) const;

  SynthesisResult synthesize(const SlotSeq& s, uint64_t prior_seed = 0,
                             bool sample = false) const;

 private:
  ModelConfig cfg_;
  Tensor embed_;  // [P+1, D]
  DurationPredictor duration_;
  MelGenerator melgen_;
  Tensor proj_w_, proj_b_;
};

// Two-stage pipeline: recognize phonemes with the stage-1 encoder (argmax +
// truncate), re-pad, and hand the text to the TTS baseline. Errors when the
// recognizer decodes an empty sequence ("no text recognized").
SynthesisResult synthesize_non_e2e(const ImageEncoder& itt, const TtsBaseline& tts,
                                   const Tensor& image, uint64_t prior_seed = 0,
                                   bool sample = false);

}  // namespace its
