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

#include <cstdint>
#include <functional>

namespace its {

// Kernel thread count. Defaults to ITS_THREADS if set, else 1. Each worker
// owns a disjoint index range and every output element is produced by exactly
// one worker with a fixed summation order, so results are identical for every
// thread count.
int thread_count();
void set_thread_count(int n);

// fn(begin, end) over [0, n) split into contiguous chunks.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace its
