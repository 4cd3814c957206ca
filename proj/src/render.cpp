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

#include "its/render.hpp"

#include <algorithm>
#include <cmath>

#include "its/rng.hpp"

namespace its {

Tensor render_word_image(const std::string& word, int font_id, double fg, double bg,
                         uint64_t noise_seed, const RenderConfig& cfg) {
  check(!word.empty(), "render: empty word");
  check(fg >= 0.0 && fg <= 1.0 && bg >= 0.0 && bg <= 1.0, "render: colors must be in ",
        "[0,1], got fg=", fg, " bg=", bg);
  const int n = static_cast<int>(word.size());
  // Advance = glyph + 1 column of spacing; no trailing space.
  const int text_w = n * (kGlyphW + 1) - 1;
  const int text_h = kGlyphH;

  int scale = std::min((cfg.width - 2) / text_w, (cfg.height - 2) / text_h);
  check(scale >= 1, "render: word \"", word, "\" does not fit a ", cfg.width, "x",
        cfg.height, " image");
  scale = std::min(scale, 3);

  CounterRng rng(noise_seed, "render");
  auto jitter = [&](uint64_t c) {
    return cfg.jitter == 0
               ? 0
               : static_cast<int>(rng.below(c, static_cast<uint64_t>(2 * cfg.jitter + 1))) -
                     cfg.jitter;
  };
  int x0 = std::clamp((cfg.width - text_w * scale) / 2 + jitter(0), 0,
                      cfg.width - text_w * scale);
  int y0 = std::clamp((cfg.height - text_h * scale) / 2 + jitter(1), 0,
                      cfg.height - text_h * scale);

  Tensor img = Tensor::full({1, cfg.height, cfg.width}, bg);
  auto& px = img.mutable_data();
  for (int ci = 0; ci < n; ++ci) {
    auto glyph = glyph_bitmap(font_id, word[static_cast<size_t>(ci)]);
    int gx = x0 + ci * (kGlyphW + 1) * scale;
    for (int gy = 0; gy < kGlyphH; ++gy)
      for (int gxx = 0; gxx < kGlyphW; ++gxx) {
        if (!glyph[gy][gxx]) continue;
        for (int sy = 0; sy < scale; ++sy)
          for (int sx = 0; sx < scale; ++sx) {
            int y = y0 + gy * scale + sy;
            int x = gx + gxx * scale + sx;
            px[static_cast<size_t>(y * cfg.width + x)] = fg;
          }
      }
  }

  if (cfg.noise > 0.0) {
    for (size_t i = 0; i < px.size(); ++i) {
      double u = rng.uniform(2 + i, -cfg.noise, cfg.noise);
      px[i] = std::clamp(px[i] + u, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace its
