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

#include <array>
#include <cstdint>

#include "its/common.hpp"

namespace its {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kNumFonts = 3;

// Row-major kGlyphH x kGlyphW bit mask for letter 'a' + letter_index in the
// given font. Font 0 is a classic 5x7 cap face; font 1 is a bold variant
// (horizontal dilation); font 2 is a sheared (italic-like) variant.
std::array<std::array<bool, kGlyphW>, kGlyphH> glyph_bitmap(int font_id, char letter);

}  // namespace its
