#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "memetect/image.hpp"

// Deterministic fixture generator. Everything here is a pure function of its
// seed so tests and the demo corpus are reproducible byte for byte.
namespace memetect::synth {

inline constexpr int kSize = 256;
inline constexpr int kCaptionScale = 2;

/// Smooth multi-frequency field plus filled ellipses and light grain. No
/// straight edges, no near-white or near-black pixels.
RasterImage photo(std::uint64_t seed, int width = kSize, int height = kSize);

/// Rectangular "pasted" element: two-tone frame around a block pattern.
RasterImage sticker(std::uint64_t seed, int width = 96, int height = 96);

/// Uniform random pixels in the mid range.
RasterImage noise(std::uint64_t seed, int width, int height);

/// Pronounceable uppercase words, unique in practice for distinct seeds.
std::string words(std::uint64_t seed, int count);

/// Overlay caption (white fill, black outline) centred horizontally.
/// Returns the ink bbox.
Rect caption_top(RasterImage& img, std::string_view text, int scale = kCaptionScale);
Rect caption_bottom(RasterImage& img, std::string_view text, int scale = kCaptionScale);

/// Photo with a pure-white band of `band_fraction` of the output height
/// appended above (or below) it, carrying `text` in ink style.
RasterImage with_whitespace(const RasterImage& photo, std::string_view text, double band_fraction = 0.25,
                            bool band_on_top = true);

/// Panels stacked vertically with uniform gutters. All panels must share a width.
RasterImage stack(const std::vector<RasterImage>& panels, int gutter = 8, Rgba gutter_color = {255, 255, 255, 255});

/// Ink text lines on a white canvas: a screenshot of text.
RasterImage text_only(const std::vector<std::string>& lines, int width = kSize, int height = kSize);

struct Item {
  std::string id;
  std::string family;
  std::string label;  // expected outcome code
  bool viral = false;
  RasterImage image;
};

struct CorpusShape {
  int template_families = 20;  // 3 members each, half CM and half FM
  int mi_families = 10;        // 2 members
  int ts_families = 10;        // 2 members
  int trend_groups = 5;        // 4 members
  int virals = 30;             // each stored twice
  int non_memes = 30;
  int non_multimodal = 20;     // half photo-only, half text-only
};

std::vector<Item> corpus(std::uint64_t seed, const CorpusShape& shape = {});

/// Writes PNGs plus a JSON Lines manifest (id, path, subset, label) to `dir`.
/// Returns the manifest path.
std::filesystem::path write_corpus(const std::vector<Item>& items, const std::filesystem::path& dir);

}  // namespace memetect::synth
