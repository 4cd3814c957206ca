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

#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "its/common.hpp"

namespace its {

// Strict-config helper: rejects keys outside the allowed set so typos in
// config files fail loudly instead of silently using defaults.
inline void check_allowed_keys(const nlohmann::json& obj,
                               std::initializer_list<const char*> allowed,
                               const std::string& what) {
  check(obj.is_object(), what, ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    check(ok, what, ": unknown key \"", key, "\"");
  }
}

template <typename T>
T json_get_or(const nlohmann::json& obj, const char* key, T dflt) {
  return obj.contains(key) ? obj.at(key).get<T>() : dflt;
}

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace its
