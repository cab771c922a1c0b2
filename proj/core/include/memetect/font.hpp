#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "memetect/image.hpp"

namespace memetect::font {

inline constexpr int kGlyphCols = 5;
inline constexpr int kGlyphRows = 7;
/// Horizontal advance and line pitch, in font pixels.
inline constexpr int kAdvance = 6;
inline constexpr int kLinePitch = 9;

struct Glyph {
  char ch;
  std::array<std::uint8_t, kGlyphRows> rows;  // bit 4 = leftmost column

  bool on(int row, int col) const { return (rows[row] >> (kGlyphCols - 1 - col)) & 1U; }
};

/// Uppercase A-Z and digits 0-9; every glyph is 8-connected and spans all rows.
std::span<const Glyph> glyphs();
std::optional<Glyph> glyph_for(char c);

enum class Style {
  Overlay,  // white fill, black outline: caption printed over a picture
  Ink,      // black fill, no outline: caption on a light background
};

struct TextStyle {
  int scale = 2;
  Style style = Style::Overlay;
};

/// Width in pixels of `text` rendered on one line (outline excluded).
int line_width(std::string_view text, int scale);

/// Draws one line with its glyph cells starting at (x, y). Characters without a
/// glyph render as blank cells. Returns the ink bounding box, outline included.
Rect draw_line(RasterImage& img, int x, int y, std::string_view text, const TextStyle& style);

/// Outline thickness used for Style::Overlay at `scale`.
int outline_width(int scale);

}  // namespace memetect::font
