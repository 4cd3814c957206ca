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

#include "its/fonts.hpp"
#include "its/tensor.hpp"

namespace its {

struct RenderConfig {
  int height = 32;
  int width = 96;
  double noise = 0.05;  // additive uniform noise amplitude
  int jitter = 2;       // max |offset| of the text block, pixels
};

// Rasterizes `word` in the given font as a [1, H, W] grayscale image in
// [0,1]: background bg, ink fg, integer-scaled to fit, centered up to a
// seeded jitter, plus bounded additive noise. Deterministic in its arguments.
Tensor render_word_image(const std::string& word, int font_id, double fg, double bg,
                         uint64_t noise_seed, const RenderConfig& cfg = {});

}  // namespace its
