#include "memetect/decompose.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <tuple>

#include "memetect/errors.hpp"

namespace memetect {

std::string_view to_string(LayoutKind k) {
  switch (k) {
    case LayoutKind::SingleCharacterCaption: return "SingleCharacterCaption";
    case LayoutKind::MultiSegment: return "MultiSegment";
    case LayoutKind::ImagePlusWhitespace: return "ImagePlusWhitespace";
    case LayoutKind::Other: return "Other";
  }
  return "Other";
}

std::string_view to_string(ViewKind k) {
  switch (k) {
    case ViewKind::FullImage: return "FullImage";
    case ViewKind::TextRemoved: return "TextRemoved";
    case ViewKind::Segment: return "Segment";
    case ViewKind::WhitespaceRemoved: return "WhitespaceRemoved";
    case ViewKind::SuperimposedElement: return "SuperimposedElement";
    case ViewKind::ExtractedText: return "ExtractedText";
  }
  return "FullImage";
}

ViewKind view_kind_from_string(std::string_view s) {
  for (auto k : {ViewKind::FullImage, ViewKind::TextRemoved, ViewKind::Segment, ViewKind::WhitespaceRemoved,
                 ViewKind::SuperimposedElement, ViewKind::ExtractedText}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::InvalidInput, "unknown view kind: " + std::string(s));
}

namespace decompose {

namespace {

bool reading_order(const TextRegion& a, const TextRegion& b) {
  return std::tie(a.bbox.y, a.bbox.x) < std::tie(b.bbox.y, b.bbox.x);
}

std::vector<std::uint8_t> text_mask(const RasterImage& image, const std::vector<TextRegion>& regions, int pad) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(image.width()) * image.height(), 0);
  for (const auto& r : regions) {
    const Rect b = r.bbox.padded(pad).intersect(image.bounds());
    for (int y = b.y; y < b.bottom(); ++y)
      std::fill_n(&mask[static_cast<std::size_t>(y) * image.width() + b.x], b.w, 1);
  }
  return mask;
}

constexpr int kWhiteLevel = 235;  // ceil(0.92 * 255)

std::optional<Rect> find_whitespace_band(const RasterImage& image, const std::vector<std::uint8_t>& luma,
                                         const std::vector<std::uint8_t>& mask) {
  const int w = image.width();
  const int h = image.height();
  auto row_is_white = [&](int y) {
    int total = 0, white = 0;
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      if (mask[i]) continue;
      ++total;
      if (luma[i] >= kWhiteLevel) ++white;
    }
    return total == 0 || white >= kWhitespaceRowFraction * total;
  };
  int top = 0;
  while (top < h && row_is_white(top)) ++top;
  int bottom = 0;
  while (bottom < h && row_is_white(h - 1 - bottom)) ++bottom;

  const int min_height = static_cast<int>(std::ceil(kWhitespaceMinHeight * h));
  const int max_height = static_cast<int>(0.9 * h);
  std::optional<Rect> band;
  if (top >= min_height && top <= max_height) band = Rect{0, 0, w, top};
  if (bottom >= min_height && bottom <= max_height && (!band || bottom > top)) band = Rect{0, h - bottom, w, bottom};
  return band;
}

double stddev_of(const std::vector<std::uint8_t>& luma, int width, int x0, int y0, int dx, int dy, int n) {
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = luma[static_cast<std::size_t>(y0 + i * dy) * width + x0 + i * dx];
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  return std::sqrt(std::max(0.0, sum2 / n - mean * mean));
}

// Interior runs (not touching either end) of `uniform[i]` at least kGutterMinThickness long.
std::vector<std::pair<int, int>> interior_runs(const std::vector<bool>& uniform) {
  std::vector<std::pair<int, int>> runs;
  const int n = static_cast<int>(uniform.size());
  int i = 0;
  while (i < n) {
    if (!uniform[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && uniform[j]) ++j;
    if (i > 0 && j < n && j - i >= kGutterMinThickness) runs.emplace_back(i, j);
    i = j;
  }
  return runs;
}

std::vector<std::pair<int, int>> complement(const std::vector<std::pair<int, int>>& runs, int n) {
  std::vector<std::pair<int, int>> out;
  int start = 0;
  for (const auto& [a, b] : runs) {
    if (a > start) out.emplace_back(start, a);
    start = b;
  }
  if (start < n) out.emplace_back(start, n);
  return out;
}

bool is_visual(const Rect& r, int width, const std::vector<std::uint8_t>& luma, const std::vector<std::uint8_t>& mask) {
  long long plain = 0;
  for (int y = r.y; y < r.bottom(); ++y)
    for (int x = r.x; x < r.right(); ++x) {
      const auto i = static_cast<std::size_t>(y) * width + x;
      if (mask[i] || luma[i] >= kWhiteLevel) ++plain;
    }
  return plain < 0.9 * static_cast<double>(r.area());
}

}  // namespace

std::vector<TextRegion> detect_text_regions(const RasterImage& image, const TextExtractor& extractor) {
  std::vector<TextRegion> regions;
  for (auto& r : extractor.extract(image)) {
    r.bbox = r.bbox.intersect(image.bounds());
    r.confidence = std::clamp(r.confidence, 0.0, 1.0);
    if (r.bbox.empty()) continue;
    if (r.text.empty() && r.confidence >= 0.5) r.confidence = 0.0;
    regions.push_back(std::move(r));
  }
  std::sort(regions.begin(), regions.end(), reading_order);

  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t i = 0; i < regions.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < regions.size() && !merged; ++j) {
        if (iou(regions[i].bbox, regions[j].bbox) >= 0.2) {
          regions[i].bbox = regions[i].bbox.unite(regions[j].bbox);
          if (!regions[j].text.empty()) {
            regions[i].text += regions[i].text.empty() ? regions[j].text : ' ' + regions[j].text;
          }
          regions[i].confidence = std::min(regions[i].confidence, regions[j].confidence);
          regions.erase(regions.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
        }
      }
    }
  }
  std::sort(regions.begin(), regions.end(), reading_order);
  return regions;
}

PanelLayout classify_layout(const RasterImage& image, const std::vector<TextRegion>& regions) {
  const int w = image.width();
  const int h = image.height();
  const auto luma = image.luma();
  const auto mask = text_mask(image, regions, 0);

  PanelLayout layout;
  layout.whitespace_band = find_whitespace_band(image, luma, mask);

  // XY-cut: full-width uniform row runs, then full-height column runs per band.
  std::vector<bool> row_uniform(h);
  for (int y = 0; y < h; ++y) row_uniform[y] = stddev_of(luma, w, 0, y, 1, 0, w) < kGutterMaxStddev;
  const auto row_gutters = interior_runs(row_uniform);
  for (const auto& [a, b] : row_gutters) layout.gutters.push_back({0, a, w, b - a});

  std::vector<Rect> cells;
  for (const auto& [y0, y1] : complement(row_gutters, h)) {
    std::vector<bool> col_uniform(w);
    for (int x = 0; x < w; ++x) col_uniform[x] = stddev_of(luma, w, x, y0, 0, 1, y1 - y0) < kGutterMaxStddev;
    const auto col_gutters = interior_runs(col_uniform);
    for (const auto& [a, b] : col_gutters) layout.gutters.push_back({a, y0, b - a, y1 - y0});
    for (const auto& [x0, x1] : complement(col_gutters, w)) cells.push_back({x0, y0, x1 - x0, y1 - y0});
  }
  const double min_area = kSegmentMinArea * w * h;
  for (const auto& c : cells) {
    if (c.area() >= min_area && is_visual(c, w, luma, mask)) layout.segments.push_back(c);
  }

  if (layout.segments.size() >= 2) {
    layout.kind = LayoutKind::MultiSegment;
  } else if (layout.whitespace_band) {
    layout.kind = LayoutKind::ImagePlusWhitespace;
  } else if (layout.segments.size() == 1) {
    const Rect& seg = layout.segments.front();
    const bool overlay = std::any_of(regions.begin(), regions.end(), [&](const TextRegion& r) {
      return r.confidence >= 0.5 && 2 * r.bbox.intersect(seg).area() >= r.bbox.area();
    });
    layout.kind = overlay ? LayoutKind::SingleCharacterCaption : LayoutKind::Other;
  }
  if (layout.kind != LayoutKind::MultiSegment) layout.gutters.clear();
  return layout;
}

DerivedView full_view(const RasterImage& image) {
  return {ViewKind::FullImage, 0, image, {}, {image.bounds()}};
}

DerivedView crop_remove_text(const RasterImage& image, const std::vector<TextRegion>& regions) {
  const Rect bounds = image.bounds();
  if (regions.empty()) return {ViewKind::TextRemoved, 0, image, {}, {bounds}};

  const auto mask = text_mask(image, regions, 0);
  const auto covered = std::count(mask.begin(), mask.end(), std::uint8_t{1});
  if (static_cast<double>(covered) >= kTextCropMaxCoverage * static_cast<double>(bounds.area())) {
    throw Error(ErrorCode::NothingLeft, "text regions cover the image; nothing left after crop");
  }

  std::vector<int> xs{0, bounds.w}, ys{0, bounds.h};
  for (const auto& r : regions) {
    const Rect b = r.bbox.intersect(bounds);
    xs.insert(xs.end(), {b.x, b.right()});
    ys.insert(ys.end(), {b.y, b.bottom()});
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  Rect best{};
  for (std::size_t a = 0; a < ys.size(); ++a)
    for (std::size_t b = a + 1; b < ys.size(); ++b)
      for (std::size_t c = 0; c < xs.size(); ++c)
        for (std::size_t d = c + 1; d < xs.size(); ++d) {
          const Rect cand{xs[c], ys[a], xs[d] - xs[c], ys[b] - ys[a]};
          if (cand.area() <= best.area()) continue;
          const bool clear = std::none_of(regions.begin(), regions.end(),
                                          [&](const TextRegion& r) { return !cand.intersect(r.bbox).empty(); });
          if (clear) best = cand;
        }
  if (best.empty()) throw Error(ErrorCode::NothingLeft, "no text-free rectangle remains");
  return {ViewKind::TextRemoved, 0, image.crop(best), {}, {best}};
}

std::vector<DerivedView> split_segments(const RasterImage& image, const PanelLayout& layout) {
  if (layout.kind != LayoutKind::MultiSegment) {
    throw Error(ErrorCode::ContractViolation, "split_segments requires a MultiSegment layout");
  }
  std::vector<DerivedView> out;
  int index = 0;
  for (const auto& seg : layout.segments) out.push_back({ViewKind::Segment, index++, image.crop(seg), {}, {seg}});
  return out;
}

DerivedView crop_remove_whitespace(const RasterImage& image, const PanelLayout& layout) {
  if (layout.kind != LayoutKind::ImagePlusWhitespace || !layout.whitespace_band) {
    throw Error(ErrorCode::ContractViolation, "crop_remove_whitespace requires a detected whitespace band");
  }
  const Rect band = *layout.whitespace_band;
  const Rect rest = band.y == 0 ? Rect{0, band.bottom(), image.width(), image.height() - band.bottom()}
                                : Rect{0, 0, image.width(), band.y};
  if (rest.empty()) throw Error(ErrorCode::NothingLeft, "whitespace band covers the image");
  return {ViewKind::WhitespaceRemoved, 0, image.crop(rest), {}, {rest}};
}

namespace {

constexpr int kEdgeContrast = 48;
constexpr int kMinLineRun = 28;
constexpr int kMaxRunGap = 2;
constexpr int kMinElementSide = 16;

int channel_diff(const RasterImage& img, int x0, int y0, int x1, int y1) {
  const Rgba a = img.at(x0, y0);
  const Rgba b = img.at(x1, y1);
  return std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)});
}

// Marks runs of `strong` at least kMinLineRun long (tolerating short gaps) into `lines`.
template <typename At>
void mark_runs(int length, At strong, std::vector<std::uint8_t>& lines, const std::vector<std::size_t>& index) {
  int i = 0;
  while (i < length) {
    if (!strong(i)) {
      ++i;
      continue;
    }
    int j = i + 1, last = i;
    while (j < length && j - last <= kMaxRunGap + 1) {
      if (strong(j)) last = j;
      ++j;
    }
    if (last - i + 1 >= kMinLineRun)
      for (int k = i; k <= last; ++k) lines[index[k]] = 1;
    i = last + 1;
  }
}

}  // namespace

std::vector<DerivedView> extract_superimposed_elements(const RasterImage& image,
                                                       const std::vector<TextRegion>& regions) {
  const int w = image.width();
  const int h = image.height();
  if (w < 2 * kMinElementSide || h < 2 * kMinElementSide) return {};
  const auto mask = text_mask(image, regions, 2);
  auto masked = [&](int x, int y) { return mask[static_cast<std::size_t>(y) * w + x] != 0; };

  // Contrast across the boundary below (dy) and to the right (dx) of each pixel.
  std::vector<std::uint8_t> dy(static_cast<std::size_t>(w) * h, 0), dx(dy.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      if (y + 1 < h && !masked(x, y) && !masked(x, y + 1)) dy[i] = static_cast<std::uint8_t>(channel_diff(image, x, y, x, y + 1));
      if (x + 1 < w && !masked(x, y) && !masked(x + 1, y)) dx[i] = static_cast<std::uint8_t>(channel_diff(image, x, y, x + 1, y));
    }

  std::vector<std::uint8_t> lines(dy.size(), 0);
  std::vector<std::size_t> idx;
  for (int y = 0; y < h; ++y) {
    idx.resize(w);
    for (int x = 0; x < w; ++x) idx[x] = static_cast<std::size_t>(y) * w + x;
    mark_runs(w, [&](int x) { return dy[idx[x]] >= kEdgeContrast; }, lines, idx);
  }
  for (int x = 0; x < w; ++x) {
    idx.resize(h);
    for (int y = 0; y < h; ++y) idx[y] = static_cast<std::size_t>(y) * w + x;
    mark_runs(h, [&](int y) { return dx[idx[y]] >= kEdgeContrast; }, lines, idx);
  }

  // 8-connected components of straight-edge pixels.
  std::vector<int> label(lines.size(), 0);
  struct Proposal {
    Rect rect;
    double salience;
  };
  std::vector<Proposal> proposals;
  std::vector<std::size_t> stack;
  int next = 0;
  for (std::size_t start = 0; start < lines.size(); ++start) {
    if (!lines[start] || label[start]) continue;
    ++next;
    label[start] = next;
    stack.assign(1, start);
    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      const int px = static_cast<int>(p % w), py = static_cast<int>(p / w);
      x0 = std::min(x0, px);
      x1 = std::max(x1, px);
      y0 = std::min(y0, py);
      y1 = std::max(y1, py);
      for (int oy = -1; oy <= 1; ++oy)
        for (int ox = -1; ox <= 1; ++ox) {
          const int nx = px + ox, ny = py + oy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const auto q = static_cast<std::size_t>(ny) * w + nx;
          if (lines[q] && !label[q]) {
            label[q] = next;
            stack.push_back(q);
          }
        }
    }
    const Rect box{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    if (box.w < kMinElementSide || box.h < kMinElementSide) continue;
    const double frac = static_cast<double>(box.area()) / (static_cast<double>(w) * h);
    if (frac < 0.01 || frac > 0.6) continue;

    // Perimeter evidence: how much of each side is traced by this component.
    auto side_cover = [&](bool horizontal, int fixed, int from, int to, double& contrast) {
      int hit = 0;
      for (int t = from; t < to; ++t) {
        bool found = false;
        for (int off = -2; off <= 2 && !found; ++off) {
          const int x = horizontal ? t : fixed + off;
          const int y = horizontal ? fixed + off : t;
          if (x < 0 || y < 0 || x >= w || y >= h) continue;
          const auto q = static_cast<std::size_t>(y) * w + x;
          if (label[q] == next) {
            found = true;
            contrast += horizontal ? dy[q] : dx[q];
          }
        }
        hit += found ? 1 : 0;
      }
      return static_cast<double>(hit) / std::max(1, to - from);
    };
    double contrast = 0;
    const double top = side_cover(true, box.y, box.x, box.right(), contrast);
    const double bottom = side_cover(true, box.bottom() - 1, box.x, box.right(), contrast);
    const double left = side_cover(false, box.x, box.y, box.bottom(), contrast);
    const double right = side_cover(false, box.right() - 1, box.y, box.bottom(), contrast);
    const double mean_cover = (top + bottom + left + right) / 4.0;
    if (std::min({top, bottom, left, right}) < 0.3 || mean_cover < 0.6) continue;
    const double perimeter = 2.0 * (box.w + box.h);
    const double salience = mean_cover * std::min(1.0, contrast / (perimeter * 255.0));

    // Edges sit on the last pixel before each boundary; shift to the element interior.
    // A little surrounding context keeps keypoints near the rim describable.
    Rect element{box.x + 1, box.y + 1, box.w - 1, box.h - 1};
    element = element.padded(kElementMargin).intersect(image.bounds());
    proposals.push_back({element, salience});
  }

  std::sort(proposals.begin(), proposals.end(), [](const Proposal& a, const Proposal& b) {
    if (a.salience != b.salience) return a.salience > b.salience;
    return std::tie(a.rect.y, a.rect.x) < std::tie(b.rect.y, b.rect.x);
  });
  std::vector<DerivedView> out;
  std::vector<Rect> kept;
  for (const auto& p : proposals) {
    if (kept.size() >= kMaxElements) break;
    if (std::any_of(kept.begin(), kept.end(), [&](const Rect& k) { return iou(k, p.rect) > 0.5; })) continue;
    kept.push_back(p.rect);
    out.push_back({ViewKind::SuperimposedElement, static_cast<int>(out.size()), image.crop(p.rect), {}, {p.rect}});
  }
  return out;
}

DerivedView extract_text(const std::vector<TextRegion>& regions) {
  DerivedView view{ViewKind::ExtractedText, 0, std::nullopt, {}, {}};
  std::string joined;
  for (const auto& r : regions) {
    if (r.text.empty()) continue;
    if (!joined.empty()) joined.push_back(' ');
    joined += r.text;
    view.source.push_back(r.bbox);
  }
  bool space = false;
  for (char c : joined) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !view.text.empty()) view.text.push_back(' ');
    space = false;
    view.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return view;
}

double text_coverage(const RasterImage& image, const std::vector<TextRegion>& regions) {
  const int w = image.width();
  const int h = image.height();
  const Rgba ref = image.at(0, 0);
  auto differs = [&](int x, int y) {
    const Rgba p = image.at(x, y);
    return std::max({std::abs(p.r - ref.r), std::abs(p.g - ref.g), std::abs(p.b - ref.b)}) > 24;
  };
  bool uniform_border = true;
  for (int x = 0; x < w && uniform_border; ++x) uniform_border = !differs(x, 0) && !differs(x, h - 1);
  for (int y = 0; y < h && uniform_border; ++y) uniform_border = !differs(0, y) && !differs(w - 1, y);

  Rect content = image.bounds();
  if (uniform_border) {
    Rect found{};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (differs(x, y)) found = found.unite({x, y, 1, 1});
    if (!found.empty()) content = found;
  }
  const auto mask = text_mask(image, regions, 0);
  long long covered = 0;
  for (int y = content.y; y < content.bottom(); ++y)
    for (int x = content.x; x < content.right(); ++x) covered += mask[static_cast<std::size_t>(y) * w + x];
  return static_cast<double>(covered) / static_cast<double>(content.area());
}

}  // namespace decompose
}  // namespace memetect
