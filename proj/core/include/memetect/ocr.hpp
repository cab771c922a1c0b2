#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "memetect/image.hpp"

namespace memetect {

struct TextRegion {
  Rect bbox;
  std::string text;
  double confidence = 0.0;

  friend bool operator==(const TextRegion&, const TextRegion&) = default;
};

/// Text-extraction adapter: image in, (bbox, text, confidence) triples out.
/// Implementations must be safe to call concurrently from several threads.
class TextExtractor {
 public:
  virtual ~TextExtractor() = default;
  virtual std::string name() const = 0;
  virtual std::vector<TextRegion> extract(const RasterImage& image) const = 0;
};

/// Reads text rendered in the built-in bitmap font (see font.hpp) at any
/// integer scale, in either polarity. Lines are merged into caption blocks.
class GlyphTextExtractor final : public TextExtractor {
 public:
  std::string name() const override { return "glyph"; }
  std::vector<TextRegion> extract(const RasterImage& image) const override;
};

/// Backend registry keyed by the `ocr.backend` configuration value.
/// Unknown or unbuilt backends raise ErrorCode::BackendMissing.
std::shared_ptr<const TextExtractor> make_text_extractor(std::string_view backend);

}  // namespace memetect
