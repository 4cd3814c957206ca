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

#pragma once

#include <string>
#include <vector>

#include "its/phoneme.hpp"

namespace its {

// Grapheme-to-phoneme: curated lexicon first, then a deterministic
// letter-to-phoneme fallback (with adjacent duplicates collapsed), so any
// lowercase alphabetic word of at most max_len letters maps to 1..max_len
// phoneme ids. Errors on non-alphabetic input or over-long words.
std::vector<int> g2p_lookup(const std::string& word, int max_len = kDefaultSlots);

// Words with a curated pronunciation (the toy corpus vocabulary).
const std::vector<std::string>& g2p_lexicon_words();

}  // namespace its
