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

#include "its/fonts.hpp"

namespace its {

namespace {

// Classic 5x7 cap-height face, one string per glyph row, '#' = ink.
const char* const kFace[26][kGlyphH] = {
    // A
    {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},
    // B
    {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."},
    // C
    {".####", "#....", "#....", "#....", "#....", "#....", ".####"},
    // D
    {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."},
    // E
    {"#####", "#....", "#....", "####.", "#....", "#....", "#####"},
    // F
    {"#####", "#....", "#....", "####.", "#....", "#....", "#...."},
    // G
    {".####", "#....", "#....", "#.###", "#...#", "#...#", ".###."},
    // H
    {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},
    // I
    {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."},
    // J
    {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."},
    // K
    {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"},
    // L
    {"#....", "#....", "#....", "#....", "#....", "#....", "#####"},
    // M
    {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"},
    // N
    {"#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"},
    // O
    {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."},
    // P
    {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."},
    // Q
    {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"},
    // R
    {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"},
    // S
    {".####", "#....", "#....", ".###.", "....#", "....#", "####."},
    // T
    {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."},
    // U
    {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."},
    // V
    {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."},
    // W
    {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"},
    // X
    {"#...#", ".#.#.", "..#..", "..#..", "..#..", ".#.#.", "#...#"},
    // Y
    {"#...#", ".#.#.", "..#..", "..#..", "..#..", "..#..", "..#.."},
    // Z
    {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"},
};

}  // namespace

std::array<std::array<bool, kGlyphW>, kGlyphH> glyph_bitmap(int font_id, char letter) {
  check(font_id >= 0 && font_id < kNumFonts, "font: id ", font_id, " outside [0,",
        kNumFonts, ")");
  check(letter >= 'a' && letter <= 'z', "font: unrenderable glyph '",
        std::string(1, letter), "'");
  const char* const* rows = kFace[letter - 'a'];
  std::array<std::array<bool, kGlyphW>, kGlyphH> base{};
  for (int y = 0; y < kGlyphH; ++y)
    for (int x = 0; x < kGlyphW; ++x) base[y][x] = rows[y][x] == '#';
  if (font_id == 0) return base;

  std::array<std::array<bool, kGlyphW>, kGlyphH> out{};
  if (font_id == 1) {
    // Bold: dilate one pixel to the right inside the cell.
    for (int y = 0; y < kGlyphH; ++y)
      for (int x = 0; x < kGlyphW; ++x)
        out[y][x] = base[y][x] || (x > 0 && base[y][x - 1]);
    return out;
  }
  // Italic-like shear: top rows shift right, bottom rows shift left.
  for (int y = 0; y < kGlyphH; ++y) {
    int shift = y < 2 ? 1 : (y >= 5 ? -1 : 0);
    for (int x = 0; x < kGlyphW; ++x) {
      int sx = x - shift;
      out[y][x] = sx >= 0 && sx < kGlyphW && base[y][sx];
    }
  }
  return out;
}

}  // namespace its
