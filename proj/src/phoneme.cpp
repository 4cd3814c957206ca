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

#include "its/phoneme.hpp"

#include <map>

namespace its {

const std::vector<std::string>& phoneme_names() {
  static const std::vector<std::string> names = {
      "eps",                                            // 0
      "AA", "AE", "AH", "EH", "IH", "IY", "OW", "UW",   // vowels 1..8
      "B",  "D",  "F",  "G",  "K",  "L",  "M",  "N",    // consonants 9..16
      "P",  "R",  "S",  "T"};                           // consonants 17..20
  return names;
}

int phoneme_id(const std::string& name) {
  static const std::map<std::string, int> index = [] {
    std::map<std::string, int> m;
    const auto& names = phoneme_names();
    for (size_t i = 0; i < names.size(); ++i) m[names[i]] = static_cast<int>(i);
    return m;
  }();
  auto it = index.find(name);
  check(it != index.end(), "phoneme: unknown symbol \"", name, "\"");
  return it->second;
}

bool is_vowel(int id) { return id >= 1 && id <= 8; }
bool is_epsilon(int id) { return id == kEpsilonId; }

SlotSeq pad_to_slots(const std::vector<int>& phonemes, int L) {
  check(!phonemes.empty(), "pad_to_slots: empty phoneme sequence");
  check(static_cast<int>(phonemes.size()) <= L, "pad_to_slots: ", phonemes.size(),
        " phonemes exceed ", L, " slots");
  SlotSeq s;
  s.n_phonemes = static_cast<int>(phonemes.size());
  s.symbols = phonemes;
  for (int id : phonemes)
    check(id >= 1 && id <= kNumPhonemes, "pad_to_slots: invalid phoneme id ", id);
  s.symbols.resize(static_cast<size_t>(L), kEpsilonId);
  return s;
}

void validate_slotseq(const SlotSeq& s) {
  check(s.n_phonemes >= 1 && s.n_phonemes <= s.slots(), "slotseq: N=", s.n_phonemes,
        " outside [1,", s.slots(), "]");
  for (int i = 0; i < s.slots(); ++i) {
    int id = s.symbols[static_cast<size_t>(i)];
    if (i < s.n_phonemes)
      check(id >= 1 && id <= kNumPhonemes, "slotseq: slot ", i,
            " must be a phoneme, got id ", id);
    else
      check(id == kEpsilonId, "slotseq: slot ", i, " must be ε, got id ", id);
  }
}

void validate_durations(const SlotSeq& s, const DurationVec& d, int64_t mel_t) {
  validate_slotseq(s);
  check(static_cast<int>(d.size()) == s.slots(), "durations: ", d.size(),
        " entries for ", s.slots(), " slots");
  int64_t total = 0;
  for (int i = 0; i < s.slots(); ++i) {
    if (i < s.n_phonemes)
      check(d[static_cast<size_t>(i)] > 0, "durations: phoneme slot ", i,
            " has non-positive duration ", d[static_cast<size_t>(i)]);
    else
      check(d[static_cast<size_t>(i)] == 0, "durations: ε slot ", i,
            " has duration ", d[static_cast<size_t>(i)]);
    total += d[static_cast<size_t>(i)];
  }
  check(total == mel_t, "durations: sum ", total, " != mel frame count ", mel_t);
}

}  // namespace its
