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

#include "its/g2p.hpp"

#include <map>
#include <sstream>

namespace its {

namespace {

// Curated toy pronunciations in inventory symbols, space-separated.
const std::map<std::string, std::string>& lexicon() {
  static const std::map<std::string, std::string> lex = {
      {"a", "AH"},          {"an", "AE N"},       {"apple", "AE P L"},
      {"at", "AE T"},       {"bat", "B AE T"},    {"bird", "B R D"},
      {"blue", "B L UW"},   {"book", "B UW K"},   {"bread", "B R EH D"},
      {"cat", "K AE T"},    {"dog", "D AA G"},    {"door", "D OW R"},
      {"dot", "D AA T"},    {"fish", "F IH S"},   {"floor", "F L OW R"},
      {"glass", "G L AE S"},{"go", "G OW"},       {"green", "G R IY N"},
      {"in", "IH N"},       {"it", "IH T"},       {"king", "K IH N G"},
      {"lake", "L EH K"},   {"like", "L AH K"},   {"mad", "M AE D"},
      {"me", "M IY"},       {"milk", "M IH L K"}, {"moon", "M UW N"},
      {"mouse", "M UW S"},  {"no", "N OW"},       {"on", "AA N"},
      {"paper", "P EH P R"},{"pen", "P EH N"},    {"pot", "P AA T"},
      {"rain", "R EH N"},   {"rat", "R AE T"},    {"red", "R EH D"},
      {"ring", "R IH N G"}, {"run", "R AH N"},    {"sad", "S AE D"},
      {"sat", "S AE T"},    {"see", "S IY"},      {"sing", "S IH N G"},
      {"sit", "S IH T"},    {"snow", "S N OW"},   {"song", "S AA N G"},
      {"stand", "S T AE N D"}, {"star", "S T AA R"}, {"stone", "S T OW N"},
      {"sun", "S AH N"},    {"table", "T EH B L"},{"to", "T UW"},
      {"tree", "T R IY"},   {"up", "AH P"}};
  return lex;
}

// Fallback letter map; every a..z letter yields exactly one phoneme.
int letter_phoneme(char c) {
  static const char* map[26] = {
      "AE", "B", "K", "D", "EH", "F", "G", "AH", "IH", "G", "K", "L", "M",
      "N",  "AA", "P", "K", "R", "S", "T", "AH", "F", "UW", "S", "IY", "S"};
  return phoneme_id(map[c - 'a']);
}

}  // namespace

const std::vector<std::string>& g2p_lexicon_words() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w;
    for (const auto& [word, pron] : lexicon()) {
      (void)pron;
      w.push_back(word);
    }
    return w;
  }();
  return words;
}

std::vector<int> g2p_lookup(const std::string& word, int max_len) {
  check(!word.empty(), "g2p: empty word");
  for (char c : word)
    check(c >= 'a' && c <= 'z', "g2p: non-alphabetic character '", std::string(1, c),
          "' in \"", word, "\"");
  check(static_cast<int>(word.size()) <= max_len, "g2p: word \"", word, "\" has ",
        word.size(), " letters, limit ", max_len);

  std::vector<int> out;
  auto it = lexicon().find(word);
  if (it != lexicon().end()) {
    std::istringstream ss(it->second);
    std::string sym;
    while (ss >> sym) out.push_back(phoneme_id(sym));
  } else {
    for (char c : word) {
      int id = letter_phoneme(c);
      if (out.empty() || out.back() != id) out.push_back(id);
    }
  }
  check(!out.empty() && static_cast<int>(out.size()) <= max_len,
        "g2p: pronunciation length ", out.size(), " outside [1,", max_len, "] for \"",
        word, "\"");
  return out;
}

}  // namespace its
