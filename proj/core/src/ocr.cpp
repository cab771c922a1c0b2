#include "memetect/ocr.hpp"

#include <algorithm>
#include <map>
#include <opencv2/imgproc.hpp>
#include <tuple>

#include "memetect/errors.hpp"
#include "memetect/font.hpp"

namespace memetect {

namespace {

constexpr std::uint8_t kBrightLuma = 235;
constexpr std::uint8_t kDarkLuma = 20;
constexpr int kMaxScale = 40;
constexpr int kMaxWordGapCells = 3;

struct TrimmedGlyph {
  char ch;
  int left_col;
  int cols;
  std::array<std::uint8_t, font::kGlyphRows> rows;  // bit (cols-1-c) = column c
};

const std::vector<TrimmedGlyph>& trimmed_glyphs() {
  static const std::vector<TrimmedGlyph> table = [] {
    std::vector<TrimmedGlyph> out;
    for (const auto& g : font::glyphs()) {
      int c0 = font::kGlyphCols, c1 = -1;
      for (int r = 0; r < font::kGlyphRows; ++r)
        for (int c = 0; c < font::kGlyphCols; ++c)
          if (g.on(r, c)) {
            c0 = std::min(c0, c);
            c1 = std::max(c1, c);
          }
      TrimmedGlyph t{g.ch, c0, c1 - c0 + 1, {}};
      for (int r = 0; r < font::kGlyphRows; ++r) t.rows[r] = static_cast<std::uint8_t>(g.rows[r] >> (font::kGlyphCols - 1 - c1));
      out.push_back(t);
    }
    return out;
  }();
  return table;
}

struct FoundGlyph {
  char ch;
  int polarity;
  int scale;
  Rect bbox;
  int cell_x;
};

struct Line {
  int polarity;
  int scale;
  Rect bbox;
  std::string text;
};

void find_glyphs(const cv::Mat& mask, int polarity, std::vector<FoundGlyph>& out) {
  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(mask, labels, stats, centroids, 8, CV_32S);
  for (int label = 1; label < n; ++label) {
    const int x = stats.at<int>(label, cv::CC_STAT_LEFT);
    const int y = stats.at<int>(label, cv::CC_STAT_TOP);
    const int w = stats.at<int>(label, cv::CC_STAT_WIDTH);
    const int h = stats.at<int>(label, cv::CC_STAT_HEIGHT);
    if (h < font::kGlyphRows || h % font::kGlyphRows != 0) continue;
    const int s = h / font::kGlyphRows;
    if (s > kMaxScale || w % s != 0) continue;
    const int cols = w / s;
    if (cols > font::kGlyphCols) continue;

    std::array<std::uint8_t, font::kGlyphRows> bits{};
    bool pure = true;
    const int block = s * s;
    for (int r = 0; r < font::kGlyphRows && pure; ++r) {
      for (int c = 0; c < cols; ++c) {
        int count = 0;
        for (int yy = 0; yy < s; ++yy) {
          const int* row = labels.ptr<int>(y + r * s + yy);
          for (int xx = 0; xx < s; ++xx) count += row[x + c * s + xx] == label ? 1 : 0;
        }
        if (count * 10 >= block * 9) {
          bits[r] = static_cast<std::uint8_t>(bits[r] | 1U << (cols - 1 - c));
        } else if (count * 10 > block) {
          pure = false;
          break;
        }
      }
    }
    if (!pure) continue;
    for (const auto& g : trimmed_glyphs()) {
      if (g.cols == cols && g.rows == bits) {
        out.push_back({g.ch, polarity, s, {x, y, w, h}, x - g.left_col * s});
        break;
      }
    }
  }
}

std::vector<Line> assemble_lines(std::vector<FoundGlyph> found) {
  std::sort(found.begin(), found.end(), [](const FoundGlyph& a, const FoundGlyph& b) {
    return std::tie(a.polarity, a.scale, a.bbox.y, a.cell_x) < std::tie(b.polarity, b.scale, b.bbox.y, b.cell_x);
  });
  std::vector<Line> lines;
  std::vector<FoundGlyph> run;
  auto flush = [&] {
    if (run.size() >= 2) {
      Line line{run.front().polarity, run.front().scale, {}, {}};
      const int adv = font::kAdvance * line.scale;
      for (std::size_t i = 0; i < run.size(); ++i) {
        if (i > 0) {
          const int gaps = (run[i].cell_x - run[i - 1].cell_x) / adv - 1;
          if (gaps > 0) line.text.push_back(' ');
        }
        line.text.push_back(run[i].ch);
        line.bbox = line.bbox.unite(run[i].bbox);
      }
      lines.push_back(std::move(line));
    }
    run.clear();
  };
  for (const auto& g : found) {
    if (!run.empty()) {
      const auto& prev = run.back();
      const int adv = font::kAdvance * g.scale;
      const int delta = g.cell_x - prev.cell_x;
      const bool same_row = prev.polarity == g.polarity && prev.scale == g.scale && prev.bbox.y == g.bbox.y;
      if (!same_row || delta % adv != 0 || delta / adv - 1 > kMaxWordGapCells) flush();
    }
    run.push_back(g);
  }
  flush();
  return lines;
}

bool horizontally_overlap(const Rect& a, const Rect& b) { return a.x < b.right() && b.x < a.right(); }

}  // namespace

std::vector<TextRegion> GlyphTextExtractor::extract(const RasterImage& image) const {
  const auto luma = image.luma();
  cv::Mat gray(image.height(), image.width(), CV_8UC1, const_cast<std::uint8_t*>(luma.data()));
  cv::Mat bright, dark;
  cv::threshold(gray, bright, kBrightLuma - 1, 255, cv::THRESH_BINARY);
  cv::threshold(gray, dark, kDarkLuma, 255, cv::THRESH_BINARY_INV);

  std::vector<FoundGlyph> found;
  find_glyphs(bright, 0, found);
  find_glyphs(dark, 1, found);
  auto lines = assemble_lines(std::move(found));
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return std::tie(a.bbox.y, a.bbox.x) < std::tie(b.bbox.y, b.bbox.x);
  });

  // Stack consecutive lines of one caption into a single block.
  struct Block {
    int polarity;
    int scale;
    Rect bbox;
    Rect last_line;
    std::string text;
  };
  std::vector<Block> blocks;
  for (auto& line : lines) {
    Block* target = nullptr;
    for (auto& b : blocks) {
      const int gap = line.bbox.y - b.last_line.bottom();
      if (b.polarity == line.polarity && b.scale == line.scale && gap >= 0 && gap <= 4 * line.scale &&
          horizontally_overlap(b.bbox, line.bbox)) {
        target = &b;
      }
    }
    if (target) {
      target->bbox = target->bbox.unite(line.bbox);
      target->last_line = line.bbox;
      target->text += ' ' + line.text;
    } else {
      blocks.push_back({line.polarity, line.scale, line.bbox, line.bbox, line.text});
    }
  }

  std::vector<TextRegion> regions;
  for (const auto& b : blocks) {
    const int pad = b.polarity == 0 ? font::outline_width(b.scale) : 0;
    regions.push_back({b.bbox.padded(pad).intersect(image.bounds()), b.text, 1.0});
  }
  return regions;
}

std::shared_ptr<const TextExtractor> make_text_extractor(std::string_view backend) {
  if (backend == "glyph") return std::make_shared<GlyphTextExtractor>();
  throw Error(ErrorCode::BackendMissing, "text-extraction backend '" + std::string(backend) + "' is not available");
}

}  // namespace memetect
