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
// TSR1 tensor files: magic "TSR1", u8 dtype (0 = f32, 1 = f64), u8 rank,
// rank little-endian u64 extents, then raw little-endian values. A ".tsr1c"
// container concatenates named records: u32 name length, name bytes, TSR1.

#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "its/optim.hpp"
#include "its/tensor.hpp"

namespace its {

void write_tsr1(std::ostream& os, const Tensor& t, Precision dtype);
// Values are widened to double in memory; *dtype_out reports the file dtype.
Tensor read_tsr1(std::istream& is, Precision* dtype_out = nullptr);

void write_tsr1_file(const std::string& path, const Tensor& t, Precision dtype);
Tensor read_tsr1_file(const std::string& path, Precision* dtype_out = nullptr);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

void write_tsr1c_file(const std::string& path, const std::vector<NamedTensor>& records,
                      Precision dtype);
std::vector<NamedTensor> read_tsr1c_file(const std::string& path,
                                         Precision* dtype_out = nullptr);

}  // namespace its
