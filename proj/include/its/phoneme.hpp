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
// Toy phoneme inventory and the fixed-slot sequence layout. Id 0 is the
// non-phoneme placeholder ε; real phonemes are 1..20 (8 vowels then 12
// consonants). Sequences are padded with ε at the tail to exactly L slots.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "its/common.hpp"

namespace its {

constexpr int kEpsilonId = 0;
constexpr int kNumPhonemes = 20;              // non-ε inventory size P
constexpr int kNumSymbols = kNumPhonemes + 1; // including ε
constexpr int kDefaultSlots = 26;             // L

// Name by id; index 0 is "eps".
const std::vector<std::string>& phoneme_names();
int phoneme_id(const std::string& name);  // error when unknown
bool is_vowel(int id);
bool is_epsilon(int id);

struct SlotSeq {
  std::vector<int> symbols;  // exactly L ids; phonemes first, then ε tail
  int n_phonemes = 0;        // N

  int slots() const { return static_cast<int>(symbols.size()); }
};

// Appends L - N ε symbols; errors when the input is empty, longer than L, or
// already contains ε.
SlotSeq pad_to_slots(const std::vector<int>& phonemes, int L = kDefaultSlots);

// Enforces the tail-ε layout: non-ε in [0, N), ε in [N, L), 1 <= N <= L.
void validate_slotseq(const SlotSeq& s);

// Per-slot Mel frame counts: > 0 for phoneme slots, == 0 for ε slots, and
// summing to mel_t.
using DurationVec = std::vector<int64_t>;
void validate_durations(const SlotSeq& s, const DurationVec& d, int64_t mel_t);

}  // namespace its
