#include "memetect/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "cv_interop.hpp"
#include "json.hpp"
#include "memetect/errors.hpp"
#include "memetect/font.hpp"
#include "memetect/random.hpp"
#include "memetect/text.hpp"

namespace memetect::synth {

namespace {

std::uint8_t clamp_level(double v, int lo = 30, int hi = 225) {
  return static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(v)), lo, hi));
}

std::array<int, 3> permutation3(SplitMix64& rng) {
  std::array<int, 3> p{1, 2, 3};
  for (int i = 2; i > 0; --i) std::swap(p[i], p[rng.uniform_below(i + 1)]);
  return p;
}

}  // namespace

RasterImage photo(std::uint64_t seed, int width, int height) {
  SplitMix64 rng(seed ^ 0x70686F746FULL);
  // Distinct integer frequencies per axis keep every full row and column far
  // from uniform, so no gutter is ever detected inside a photo.
  const auto fx = permutation3(rng);
  const auto fy = permutation3(rng);
  std::array<double, 3> amp{}, phase{};
  for (int k = 0; k < 3; ++k) {
    amp[k] = rng.range(24, 30);
    phase[k] = rng.unit() * 2 * std::numbers::pi;
  }
  std::array<double, 3> base{}, gain{};
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.range(120, 135);
    gain[c] = 0.8 + 0.2 * rng.unit();
  }

  cv::Mat bgr(height, width, CV_8UC3);
  for (int y = 0; y < height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < width; ++x) {
      double f = 0;
      for (int k = 0; k < 3; ++k)
        f += amp[k] * std::cos(2 * std::numbers::pi * (fx[k] * double(x) / width + fy[k] * double(y) / height) + phase[k]);
      for (int c = 0; c < 3; ++c) row[x][2 - c] = clamp_level(base[c] + gain[c] * f);
    }
  }

  const int n = rng.range(10, 16);
  for (int i = 0; i < n; ++i) {
    const cv::Point center(rng.range(0, width - 1), rng.range(0, height - 1));
    const int rx = rng.range(8, 40);
    const int ry = std::clamp(static_cast<int>(rx * (0.67 + 0.83 * rng.unit())), 6, 40);
    const double angle = rng.range(0, 179);
    const cv::Scalar color(rng.range(40, 215), rng.range(40, 215), rng.range(40, 215));
    cv::ellipse(bgr, center, {rx, ry}, angle, 0, 360, color, cv::FILLED, cv::LINE_8);
  }

  RasterImage img = detail::from_mat(bgr);
  auto px = img.mutable_bytes();
  for (std::size_t i = 0; i < px.size(); i += 4) {
    for (int c = 0; c < 3; ++c) px[i + c] = clamp_level(px[i + c] + rng.range(-5, 5));
  }
  return img;
}

RasterImage sticker(std::uint64_t seed, int width, int height) {
  SplitMix64 rng(seed ^ 0x737469636BULL);
  RasterImage img(width, height, Rgba{220, 220, 220, 255});
  img.fill({3, 3, width - 6, height - 6}, {40, 40, 40, 255});
  constexpr int kBlock = 8;
  for (int y = 6; y < height - 6; y += kBlock)
    for (int x = 6; x < width - 6; x += kBlock) {
      const Rgba c{static_cast<std::uint8_t>(rng.range(50, 210)), static_cast<std::uint8_t>(rng.range(50, 210)),
                   static_cast<std::uint8_t>(rng.range(50, 210)), 255};
      img.fill(Rect{x, y, kBlock, kBlock}.intersect({6, 6, width - 12, height - 12}), c);
    }
  return img;
}

RasterImage noise(std::uint64_t seed, int width, int height) {
  SplitMix64 rng(seed ^ 0x6E6F697365ULL);
  RasterImage img(width, height);
  auto px = img.mutable_bytes();
  for (std::size_t i = 0; i < px.size(); i += 4)
    for (int c = 0; c < 3; ++c) px[i + c] = static_cast<std::uint8_t>(rng.range(30, 225));
  return img;
}

std::string words(std::uint64_t seed, int count) {
  static constexpr std::string_view kConsonants = "BDFGKLMNPRSTVZ";
  static constexpr std::string_view kVowels = "AEIOU";
  SplitMix64 rng(seed ^ 0x776F726473ULL);
  std::string out;
  for (int i = 0; i < count; ++i) {
    std::string w;
    do {
      w.clear();
      const int syllables = rng.range(2, 3);
      for (int s = 0; s < syllables; ++s) {
        w.push_back(kConsonants[rng.uniform_below(kConsonants.size())]);
        w.push_back(kVowels[rng.uniform_below(kVowels.size())]);
      }
    } while (text::is_stop_word(text::normalize(w)));
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

Rect caption_top(RasterImage& img, std::string_view text, int scale) {
  const int x = (img.width() - font::line_width(text, scale)) / 2;
  return font::draw_line(img, x, 6, text, {scale, font::Style::Overlay});
}

Rect caption_bottom(RasterImage& img, std::string_view text, int scale) {
  const int x = (img.width() - font::line_width(text, scale)) / 2;
  const int y = img.height() - 6 - font::kGlyphRows * scale;
  return font::draw_line(img, x, y, text, {scale, font::Style::Overlay});
}

RasterImage with_whitespace(const RasterImage& photo, std::string_view text, double band_fraction, bool band_on_top) {
  if (band_fraction <= 0 || band_fraction >= 1) throw Error(ErrorCode::InvalidInput, "band_fraction must be in (0, 1)");
  const int band = static_cast<int>(std::lround(photo.height() * band_fraction / (1 - band_fraction)));
  RasterImage out(photo.width(), photo.height() + band, Rgba{255, 255, 255, 255});
  const int band_y = band_on_top ? 0 : photo.height();
  out.blit(photo, 0, band_on_top ? band : 0);
  const int x = (out.width() - font::line_width(text, kCaptionScale)) / 2;
  const int y = band_y + (band - font::kGlyphRows * kCaptionScale) / 2;
  font::draw_line(out, x, y, text, {kCaptionScale, font::Style::Ink});
  return out;
}

RasterImage stack(const std::vector<RasterImage>& panels, int gutter, Rgba gutter_color) {
  if (panels.empty()) throw Error(ErrorCode::InvalidInput, "stack needs at least one panel");
  int h = gutter * static_cast<int>(panels.size() - 1);
  for (const auto& p : panels) {
    if (p.width() != panels.front().width()) throw Error(ErrorCode::InvalidInput, "panel widths differ");
    h += p.height();
  }
  RasterImage out(panels.front().width(), h, gutter_color);
  int y = 0;
  for (const auto& p : panels) {
    out.blit(p, 0, y);
    y += p.height() + gutter;
  }
  return out;
}

RasterImage text_only(const std::vector<std::string>& lines, int width, int height) {
  RasterImage out(width, height, Rgba{255, 255, 255, 255});
  int y = 16;
  for (const auto& line : lines) {
    font::draw_line(out, 16, y, line, {kCaptionScale, font::Style::Ink});
    y += font::kLinePitch * kCaptionScale;
  }
  return out;
}

std::vector<Item> corpus(std::uint64_t seed, const CorpusShape& shape) {
  SplitMix64 master(seed);
  std::vector<Item> items;
  auto id = [](std::string_view prefix, int family, int member) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*s-%02d-%d", static_cast<int>(prefix.size()), prefix.data(), family, member);
    return std::string(buf);
  };
  auto family_name = [](std::string_view prefix, int family) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*s-%02d", static_cast<int>(prefix.size()), prefix.data(), family);
    return std::string(buf);
  };

  for (int f = 0; f < shape.template_families; ++f) {
    const bool cm = f < (shape.template_families + 1) / 2;
    const std::string prefix = cm ? "cm" : "fm";
    if (cm) {
      const RasterImage bg = photo(master.next());
      for (int m = 0; m < 3; ++m) {
        RasterImage img = bg;
        caption_top(img, words(master.next(), 3));
        items.push_back({id(prefix, f, m), family_name(prefix, f), "CM", false, std::move(img)});
      }
    } else {
      const int panel_h = (kSize - 8) / 2;
      const RasterImage top = photo(master.next(), kSize, panel_h);
      const RasterImage bottom = photo(master.next(), kSize, panel_h);
      for (int m = 0; m < 3; ++m) {
        RasterImage a = top, b = bottom;
        caption_top(a, words(master.next(), 2));
        caption_top(b, words(master.next(), 2));
        items.push_back({id(prefix, f, m), family_name(prefix, f), "FM", false, stack({a, b})});
      }
    }
  }

  for (int f = 0; f < shape.mi_families; ++f) {
    const RasterImage base = photo(master.next(), kSize, kSize * 3 / 4);
    for (int m = 0; m < 2; ++m) {
      items.push_back({id("mi", f, m), family_name("mi", f), "MI", false, with_whitespace(base, words(master.next(), 2))});
    }
  }

  for (int f = 0; f < shape.ts_families; ++f) {
    const RasterImage element = sticker(master.next());
    for (int m = 0; m < 2; ++m) {
      RasterImage img = photo(master.next());
      SplitMix64 place(master.next());
      img.blit(element, place.range(8, kSize - element.width() - 8), place.range(40, kSize - element.height() - 8));
      caption_top(img, words(master.next(), 3));
      items.push_back({id("ts", f, m), family_name("ts", f), "TS", false, std::move(img)});
    }
  }

  for (int g = 0; g < shape.trend_groups; ++g) {
    std::string top = "BETTER LOVE STORY";
    std::string bottom = "THAN TWILIGHT";
    const auto phrase_seed = master.next();
    if (g > 0) {
      top = words(phrase_seed, 3);
      bottom = words(phrase_seed + 1, 2);
    }
    for (int m = 0; m < 4; ++m) {
      RasterImage img = photo(master.next());
      caption_top(img, top);
      caption_bottom(img, bottom);
      items.push_back({id("mt", g, m), family_name("mt", g), "MT", false, std::move(img)});
    }
  }

  for (int v = 0; v < shape.virals; ++v) {
    RasterImage img = photo(master.next());
    caption_top(img, words(master.next(), 3));
    items.push_back({id("viral", v, 0), family_name("viral", v), "nMIT", true, img});
    items.push_back({id("viral", v, 1), family_name("viral", v), "nMIT", true, std::move(img)});
  }

  for (int i = 0; i < shape.non_memes; ++i) {
    RasterImage img = photo(master.next());
    caption_top(img, words(master.next(), 3));
    items.push_back({id("plain", i, 0), family_name("plain", i), "nMIT", false, std::move(img)});
  }

  for (int i = 0; i < shape.non_multimodal; ++i) {
    if (i % 2 == 0) {
      items.push_back({id("nmm", i, 0), family_name("nmm", i), "nMM", false, photo(master.next())});
    } else {
      std::vector<std::string> lines;
      for (int l = 0; l < 6; ++l) lines.push_back(words(master.next(), 2));
      items.push_back({id("nmm", i, 0), family_name("nmm", i), "nMM", false, text_only(lines)});
    }
  }
  return items;
}

std::filesystem::path write_corpus(const std::vector<Item>& items, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  const auto manifest = dir / "manifest.jsonl";
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + manifest.string());
  for (const auto& item : items) {
    const auto rel = std::filesystem::path("images") / (item.id + ".png");
    save_png(item.image, dir / rel);
    const std::string subset = item.family.substr(0, item.family.find('-'));
    out << nlohmann::json{{"id", item.id}, {"path", rel.generic_string()}, {"subset", subset}, {"label", item.label}}.dump()
        << '\n';
  }
  return manifest;
}

}  // namespace memetect::synth
