#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "memetect/digest.hpp"

namespace memetect {

/// Axis-aligned pixel rectangle, half-open: [x, x + w) x [y, y + h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  long long area() const { return w > 0 && h > 0 ? static_cast<long long>(w) * h : 0; }
  bool empty() const { return w <= 0 || h <= 0; }
  bool contains(int px, int py) const { return px >= x && px < right() && py >= y && py < bottom(); }
  bool contains(const Rect& o) const {
    return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
  }

  Rect intersect(const Rect& o) const;
  Rect unite(const Rect& o) const;
  Rect padded(int by) const { return {x - by, y - by, w + 2 * by, h + 2 * by}; }
  Rect translated(int dx, int dy) const { return {x + dx, y + dy, w, h}; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

double iou(const Rect& a, const Rect& b);

/// RGBA pixel.
struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0, a = 255;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// Rec.601 luma in [0, 1].
inline double luminance(const Rgba& p) {
  return (0.299 * p.r + 0.587 * p.g + 0.114 * p.b) / 255.0;
}

/// Row-major RGBA raster. Width and height are always positive.
class RasterImage {
 public:
  RasterImage(int width, int height, Rgba fill = {0, 0, 0, 255});
  RasterImage(int width, int height, std::vector<std::uint8_t> rgba);

  int width() const { return width_; }
  int height() const { return height_; }
  Rect bounds() const { return {0, 0, width_, height_}; }

  Rgba at(int x, int y) const {
    const auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 4];
    return {p[0], p[1], p[2], p[3]};
  }
  void set(int x, int y, Rgba c) {
    auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 4];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
    p[3] = c.a;
  }

  std::span<const std::uint8_t> bytes() const { return pixels_; }
  std::span<std::uint8_t> mutable_bytes() { return pixels_; }

  /// SHA-256 over (width, height, pixel bytes).
  Digest content_digest() const;

  /// Copy of the region `r`; `r` must lie within bounds.
  RasterImage crop(const Rect& r) const;

  void fill(const Rect& r, Rgba c);
  void blit(const RasterImage& src, int dx, int dy);

  /// Luma plane as bytes (0..255), row-major.
  std::vector<std::uint8_t> luma() const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

RasterImage decode_image(std::span<const std::uint8_t> encoded);
RasterImage load_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const RasterImage& img);
std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality);
void save_png(const RasterImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace memetect
