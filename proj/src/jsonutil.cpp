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

#include "its/jsonutil.hpp"

#include <fstream>

namespace its {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream is(path);
  check(is.is_open(), "json: cannot open \"", path, "\"");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail("json: parse error in \"", path, "\": ", e.what());
  }
  return j;
}

void save_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  check(os.is_open(), "json: cannot open \"", path, "\" for writing");
  os << j.dump(2) << "\n";
  os.close();
  check(os.good(), "json: error writing \"", path, "\"");
}

}  // namespace its
