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
// Deterministic per-phoneme spectral-template synthesizer. Each phoneme id
// owns a fixed log-Mel band pattern (two Gaussian bumps at id-specific
// centers over a flat floor) and a base duration; a word's Mel-spectrogram
// is the concatenation of its phoneme templates with a 1-frame cross-fade,
// so ground-truth durations are exact by construction.

#pragma once

#include <vector>

#include "its/audio.hpp"
#include "its/phoneme.hpp"
#include "its/tensor.hpp"

namespace its {

// Log-domain band pattern for one phoneme id (1..P); n_mels values.
std::vector<double> phoneme_template(int id, int n_mels);

// Base duration in frames: vowels are long (9..11), consonants short (4..6).
int64_t phoneme_base_duration(int id);

// round(base / speed) clamped to >= 2.
int64_t phoneme_duration(int id, double speed_factor);

struct OracleMel {
  Tensor mel;        // [n_mels, T] log-Mel
  DurationVec durations;  // length L, tail-ε zeros
};

// Synthesizes the Mel and exact durations for a phoneme sequence; durations
// are padded to L slots. speed_factor must lie in [0.5, 2.0].
OracleMel synth_oracle_mel(const std::vector<int>& phonemes, double speed_factor,
                           int n_mels = AudioConfig{}.n_mels, int L = kDefaultSlots);

}  // namespace its
