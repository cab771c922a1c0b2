#pragma once

#include <memory>
#include <string>
#include <vector>

#include "memetect/local_index.hpp"
#include "memetect/ocr.hpp"
#include "memetect/search.hpp"
#include "memetect/synth.hpp"

namespace memetect::testing {

const TextExtractor& glyph_ocr();

/// synth::corpus(7), generated once per process.
const std::vector<synth::Item>& corpus();

/// Index entries for corpus(), in corpus order.
const std::vector<LocalIndexEntry>& corpus_entries();

const synth::Item& corpus_item(const std::string& id);

/// Index over `entries` with pixels attached from `images` (same order).
LocalIndex index_of(std::vector<LocalIndexEntry> entries, const std::vector<const RasterImage*>& images);

/// The full corpus index, shared.
std::shared_ptr<const LocalIndex> corpus_index();

/// Returns canned hits; optionally fails every call.
class CannedProvider final : public SearchProvider {
 public:
  std::vector<SearchHit> image_hits;
  std::vector<SearchHit> text_hits;
  bool fail = false;
  mutable int calls = 0;

  std::string name() const override { return "canned"; }
  std::vector<SearchHit> image_search(const RasterImage&, std::size_t n, const SearchOptions& o) const override;
  std::vector<SearchHit> text_search(std::string_view, std::size_t n, const SearchOptions& o) const override;
};

}  // namespace memetect::testing
