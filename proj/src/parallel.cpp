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

#include "its/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

#include "its/common.hpp"

namespace its {

namespace {
int g_threads = 0;  // 0 = uninitialized

int init_threads() {
  if (const char* env = std::getenv("ITS_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}
}  // namespace

int thread_count() {
  if (g_threads == 0) g_threads = init_threads();
  return g_threads;
}

void set_thread_count(int n) {
  check(n >= 1, "thread count must be >= 1, got ", n);
  g_threads = n;
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  int nt = thread_count();
  if (nt == 1 || n < 256) {
    fn(0, n);
    return;
  }
  if (n < nt) nt = static_cast<int>(n);
  int64_t chunk = (n + nt - 1) / nt;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(nt) - 1);
  for (int t = 1; t < nt; ++t) {
    int64_t b = t * chunk;
    int64_t e = std::min(n, b + chunk);
    if (b >= e) break;
    workers.emplace_back(fn, b, e);
  }
  fn(0, std::min(n, chunk));
  for (auto& w : workers) w.join();
}

}  // namespace its
