#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memetect/image.hpp"
#include "memetect/ocr.hpp"

namespace memetect {

enum class LayoutKind { SingleCharacterCaption, MultiSegment, ImagePlusWhitespace, Other };

std::string_view to_string(LayoutKind k);

struct PanelLayout {
  LayoutKind kind = LayoutKind::Other;
  std::vector<Rect> gutters;          // MultiSegment evidence
  std::vector<Rect> segments;         // visual segments, row-major
  std::optional<Rect> whitespace_band;
};

enum class ViewKind { FullImage, TextRemoved, Segment, WhitespaceRemoved, SuperimposedElement, ExtractedText };

std::string_view to_string(ViewKind k);
ViewKind view_kind_from_string(std::string_view s);

/// One input to a protocol step: a crop of the candidate, or its text.
struct DerivedView {
  ViewKind kind = ViewKind::FullImage;
  int index = 0;                     // segment / element ordinal
  std::optional<RasterImage> image;  // absent only for ExtractedText
  std::string text;                  // ExtractedText payload
  std::vector<Rect> source;          // bbox(es) in candidate coordinates
};

namespace decompose {

// Thresholds that make "whitespace" and "gutter" decidable.
inline constexpr double kWhitespaceLuma = 0.92;
inline constexpr double kWhitespaceRowFraction = 0.95;
inline constexpr double kWhitespaceMinHeight = 0.10;
inline constexpr double kGutterMaxStddev = 8.0;  // in 0..255 levels
inline constexpr int kGutterMinThickness = 4;
inline constexpr double kSegmentMinArea = 0.05;
inline constexpr double kTextCropMaxCoverage = 0.90;
inline constexpr std::size_t kMaxElements = 8;
inline constexpr int kElementMargin = 6;

/// Runs the extractor, validates and orders its output (top-to-bottom, then
/// left-to-right) and merges overlapping regions.
std::vector<TextRegion> detect_text_regions(const RasterImage& image, const TextExtractor& extractor);

PanelLayout classify_layout(const RasterImage& image, const std::vector<TextRegion>& regions);

DerivedView crop_remove_text(const RasterImage& image, const std::vector<TextRegion>& regions);
std::vector<DerivedView> split_segments(const RasterImage& image, const PanelLayout& layout);
DerivedView crop_remove_whitespace(const RasterImage& image, const PanelLayout& layout);
std::vector<DerivedView> extract_superimposed_elements(const RasterImage& image,
                                                       const std::vector<TextRegion>& regions);
DerivedView extract_text(const std::vector<TextRegion>& regions);

/// Fraction of the image's content area covered by text regions. The content
/// area excludes a uniform border margin, so a text screenshot with padding
/// still counts as fully covered.
double text_coverage(const RasterImage& image, const std::vector<TextRegion>& regions);

DerivedView full_view(const RasterImage& image);

}  // namespace decompose
}  // namespace memetect
