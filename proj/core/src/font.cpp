#include "memetect/font.hpp"

#include <algorithm>
#include <cctype>

namespace memetect::font {

namespace {

constexpr std::uint8_t row(const char (&bits)[6]) {
  std::uint8_t v = 0;
  for (int i = 0; i < 5; ++i) v = static_cast<std::uint8_t>(v << 1 | (bits[i] == '1' ? 1 : 0));
  return v;
}

#define G(c, a, b, d, e, f, g, h) Glyph{c, {row(a), row(b), row(d), row(e), row(f), row(g), row(h)}}

constexpr std::array<Glyph, 36> kGlyphs = {
    G('A', "01110", "10001", "10001", "11111", "10001", "10001", "10001"),
    G('B', "11110", "10001", "10001", "11110", "10001", "10001", "11110"),
    G('C', "01110", "10001", "10000", "10000", "10000", "10001", "01110"),
    G('D', "11100", "10010", "10001", "10001", "10001", "10010", "11100"),
    G('E', "11111", "10000", "10000", "11110", "10000", "10000", "11111"),
    G('F', "11111", "10000", "10000", "11110", "10000", "10000", "10000"),
    G('G', "01110", "10001", "10000", "10111", "10001", "10001", "01111"),
    G('H', "10001", "10001", "10001", "11111", "10001", "10001", "10001"),
    G('I', "01110", "00100", "00100", "00100", "00100", "00100", "01110"),
    G('J', "00111", "00010", "00010", "00010", "00010", "10010", "01100"),
    G('K', "10001", "10010", "10100", "11000", "10100", "10010", "10001"),
    G('L', "10000", "10000", "10000", "10000", "10000", "10000", "11111"),
    G('M', "10001", "11011", "10101", "10101", "10001", "10001", "10001"),
    G('N', "10001", "10001", "11001", "10101", "10011", "10001", "10001"),
    G('O', "01110", "10001", "10001", "10001", "10001", "10001", "01110"),
    G('P', "11110", "10001", "10001", "11110", "10000", "10000", "10000"),
    G('Q', "01110", "10001", "10001", "10001", "10101", "10010", "01101"),
    G('R', "11110", "10001", "10001", "11110", "10100", "10010", "10001"),
    G('S', "01111", "10000", "10000", "01110", "00001", "00001", "11110"),
    G('T', "11111", "00100", "00100", "00100", "00100", "00100", "00100"),
    G('U', "10001", "10001", "10001", "10001", "10001", "10001", "01110"),
    G('V', "10001", "10001", "10001", "10001", "10001", "01010", "00100"),
    G('W', "10001", "10001", "10001", "10101", "10101", "10101", "01010"),
    G('X', "10001", "10001", "01010", "00100", "01010", "10001", "10001"),
    G('Y', "10001", "10001", "10001", "01010", "00100", "00100", "00100"),
    G('Z', "11111", "00001", "00010", "00100", "01000", "10000", "11111"),
    G('0', "01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    G('1', "00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    G('2', "01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    G('3', "11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    G('4', "00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    G('5', "11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    G('6', "00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    G('7', "11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    G('8', "01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    G('9', "01110", "10001", "10001", "01111", "00001", "00010", "01100"),
};

#undef G

}  // namespace

std::span<const Glyph> glyphs() { return kGlyphs; }

std::optional<Glyph> glyph_for(char c) {
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kGlyphs)
    if (g.ch == up) return g;
  return std::nullopt;
}

int outline_width(int scale) { return std::max(1, scale / 2); }

int line_width(std::string_view text, int scale) {
  if (text.empty()) return 0;
  return static_cast<int>(text.size() - 1) * kAdvance * scale + kGlyphCols * scale;
}

Rect draw_line(RasterImage& img, int x, int y, std::string_view text, const TextStyle& style) {
  const int s = style.scale;
  const Rgba fill = style.style == Style::Overlay ? Rgba{255, 255, 255, 255} : Rgba{0, 0, 0, 255};
  const Rgba edge{0, 0, 0, 255};
  const int o = style.style == Style::Overlay ? outline_width(s) : 0;
  Rect ink{};

  // Outline pass first so neighbouring glyph fills are never overdrawn.
  for (int pass = (o > 0 ? 0 : 1); pass < 2; ++pass) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      auto g = glyph_for(text[i]);
      if (!g) continue;
      const int cx = x + static_cast<int>(i) * kAdvance * s;
      for (int r = 0; r < kGlyphRows; ++r) {
        for (int c = 0; c < kGlyphCols; ++c) {
          if (!g->on(r, c)) continue;
          Rect cell{cx + c * s, y + r * s, s, s};
          if (pass == 0) {
            img.fill(cell.padded(o), edge);
            ink = ink.unite(cell.padded(o).intersect(img.bounds()));
          } else {
            img.fill(cell, fill);
            ink = ink.unite(cell.intersect(img.bounds()));
          }
        }
      }
    }
  }
  return ink;
}

}  // namespace memetect::font
