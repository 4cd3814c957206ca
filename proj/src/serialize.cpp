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

#include "its/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace its {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'R', '1'};
constexpr int kMaxRank = 8;
constexpr uint32_t kMaxNameLen = 4096;

void put_bytes_le(std::ostream& os, uint64_t v, int nbytes) {
  char buf[8];
  for (int i = 0; i < nbytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, nbytes);
}

uint64_t get_bytes_le(std::istream& is, int nbytes, const char* what) {
  char buf[8];
  is.read(buf, nbytes);
  check(is.good(), "tsr1: truncated file while reading ", what);
  uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i)
    v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace

void write_tsr1(std::ostream& os, const Tensor& t, Precision dtype) {
  check(t.defined(), "tsr1: cannot write an undefined tensor");
  const Shape& s = t.shape();
  check(static_cast<int>(s.size()) <= kMaxRank, "tsr1: rank ", s.size(), " exceeds ",
        kMaxRank);
  os.write(kMagic, 4);
  os.put(dtype == Precision::f32 ? 0 : 1);
  os.put(static_cast<char>(s.size()));
  for (int64_t e : s) put_bytes_le(os, static_cast<uint64_t>(e), 8);
  for (double v : t.data()) {
    if (dtype == Precision::f32)
      put_bytes_le(os, std::bit_cast<uint32_t>(static_cast<float>(v)), 4);
    else
      put_bytes_le(os, std::bit_cast<uint64_t>(v), 8);
  }
  check(os.good(), "tsr1: write failed");
}

Tensor read_tsr1(std::istream& is, Precision* dtype_out) {
  char magic[4];
  is.read(magic, 4);
  check(is.good() && std::memcmp(magic, kMagic, 4) == 0, "tsr1: bad magic");
  uint64_t code = get_bytes_le(is, 1, "dtype");
  check(code == 0 || code == 1, "tsr1: unknown dtype code ", code);
  Precision dtype = code == 0 ? Precision::f32 : Precision::f64;
  if (dtype_out) *dtype_out = dtype;
  uint64_t rank = get_bytes_le(is, 1, "rank");
  check(rank <= kMaxRank, "tsr1: rank ", rank, " exceeds ", kMaxRank);
  Shape shape(rank);
  int64_t numel = 1;
  for (uint64_t i = 0; i < rank; ++i) {
    uint64_t e = get_bytes_le(is, 8, "extent");
    check(e >= 1 && e <= (1ull << 32), "tsr1: bad extent ", e);
    shape[i] = static_cast<int64_t>(e);
    numel *= shape[i];
    check(numel <= (1ll << 33), "tsr1: tensor too large");
  }
  std::vector<double> data(static_cast<size_t>(numel));
  for (double& v : data) {
    if (dtype == Precision::f32)
      v = std::bit_cast<float>(static_cast<uint32_t>(get_bytes_le(is, 4, "value")));
    else
      v = std::bit_cast<double>(get_bytes_le(is, 8, "value"));
  }
  return Tensor::from_data(std::move(shape), std::move(data));
}

void write_tsr1_file(const std::string& path, const Tensor& t, Precision dtype) {
  std::ofstream os(path, std::ios::binary);
  check(os.is_open(), "tsr1: cannot open \"", path, "\" for writing");
  write_tsr1(os, t, dtype);
  os.close();
  check(os.good(), "tsr1: error writing \"", path, "\"");
}

Tensor read_tsr1_file(const std::string& path, Precision* dtype_out) {
  std::ifstream is(path, std::ios::binary);
  check(is.is_open(), "tsr1: cannot open \"", path, "\"");
  return read_tsr1(is, dtype_out);
}

void write_tsr1c_file(const std::string& path, const std::vector<NamedTensor>& records,
                      Precision dtype) {
  std::ofstream os(path, std::ios::binary);
  check(os.is_open(), "tsr1c: cannot open \"", path, "\" for writing");
  for (const NamedTensor& r : records) {
    check(!r.name.empty() && r.name.size() <= kMaxNameLen, "tsr1c: bad record name \"",
          r.name, "\"");
    put_bytes_le(os, r.name.size(), 4);
    os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    write_tsr1(os, r.tensor, dtype);
  }
  os.close();
  check(os.good(), "tsr1c: error writing \"", path, "\"");
}

std::vector<NamedTensor> read_tsr1c_file(const std::string& path, Precision* dtype_out) {
  std::ifstream is(path, std::ios::binary);
  check(is.is_open(), "tsr1c: cannot open \"", path, "\"");
  std::vector<NamedTensor> out;
  while (true) {
    int peek = is.peek();
    if (peek == std::char_traits<char>::eof()) break;
    uint32_t len = static_cast<uint32_t>(get_bytes_le(is, 4, "record name length"));
    check(len >= 1 && len <= kMaxNameLen, "tsr1c: bad name length ", len, " in \"", path,
          "\"");
    std::string name(len, '\0');
    is.read(name.data(), len);
    check(is.good(), "tsr1c: truncated record name in \"", path, "\"");
    Precision dtype;
    Tensor t = read_tsr1(is, &dtype);
    if (dtype_out) *dtype_out = dtype;
    out.push_back(NamedTensor{std::move(name), std::move(t)});
  }
  return out;
}

}  // namespace its
