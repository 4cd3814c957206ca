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

#include "its/mel_oracle.hpp"

#include <cmath>

namespace its {

std::vector<double> phoneme_template(int id, int n_mels) {
  check(id >= 1 && id <= kNumPhonemes, "template: phoneme id ", id, " outside [1,",
        kNumPhonemes, "]");
  check(n_mels >= 16, "template: need at least 16 Mel bands, got ", n_mels);
  // Two bumps whose centers enumerate a 5x4 grid over (id-1), so all ids get
  // distinct band pairs; scaled to the band count.
  const int q = (id - 1) % 5;
  const int r = (id - 1) / 5;
  const double b1 = (2.0 + 5.0 * q) * n_mels / 32.0;
  const double b2 = (6.0 + 7.0 * r) * n_mels / 32.0;
  const double sigma = 1.4 * n_mels / 32.0;
  std::vector<double> t(static_cast<size_t>(n_mels));
  for (int f = 0; f < n_mels; ++f) {
    double d1 = (f - b1) / sigma;
    double d2 = (f - b2) / sigma;
    t[f] = -2.0 + 3.2 * std::exp(-0.5 * d1 * d1) + 2.6 * std::exp(-0.5 * d2 * d2);
  }
  return t;
}

int64_t phoneme_base_duration(int id) {
  check(id >= 1 && id <= kNumPhonemes, "base_duration: phoneme id ", id, " outside [1,",
        kNumPhonemes, "]");
  return (is_vowel(id) ? 9 : 4) + id % 3;
}

int64_t phoneme_duration(int id, double speed_factor) {
  int64_t d = std::llround(phoneme_base_duration(id) / speed_factor);
  return d < 2 ? 2 : d;
}

OracleMel synth_oracle_mel(const std::vector<int>& phonemes, double speed_factor,
                           int n_mels, int L) {
  check(!phonemes.empty(), "oracle_mel: empty phoneme sequence");
  check(speed_factor >= 0.5 && speed_factor <= 2.0, "oracle_mel: speed_factor ",
        speed_factor, " outside [0.5, 2.0]");
  const int n = static_cast<int>(phonemes.size());
  check(n <= L, "oracle_mel: ", n, " phonemes exceed ", L, " slots");

  DurationVec dur(static_cast<size_t>(L), 0);
  int64_t total = 0;
  for (int i = 0; i < n; ++i) {
    dur[static_cast<size_t>(i)] = phoneme_duration(phonemes[static_cast<size_t>(i)],
                                                   speed_factor);
    total += dur[static_cast<size_t>(i)];
  }

  Tensor mel = Tensor::zeros({n_mels, total});
  auto& md = mel.mutable_data();
  int64_t t0 = 0;
  for (int i = 0; i < n; ++i) {
    auto tmpl = phoneme_template(phonemes[static_cast<size_t>(i)], n_mels);
    int64_t d = dur[static_cast<size_t>(i)];
    for (int64_t t = 0; t < d; ++t)
      for (int f = 0; f < n_mels; ++f) md[f * total + t0 + t] = tmpl[f];
    t0 += d;
  }
  // 1-frame cross-fade: the last frame of each segment blends into the next.
  t0 = 0;
  for (int i = 0; i + 1 < n; ++i) {
    t0 += dur[static_cast<size_t>(i)];
    auto a = phoneme_template(phonemes[static_cast<size_t>(i)], n_mels);
    auto b = phoneme_template(phonemes[static_cast<size_t>(i + 1)], n_mels);
    for (int f = 0; f < n_mels; ++f)
      md[f * total + (t0 - 1)] = 0.5 * a[f] + 0.5 * b[f];
  }
  return OracleMel{std::move(mel), std::move(dur)};
}

}  // namespace its
