#include "fixtures.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "memetect/errors.hpp"

namespace memetect::testing {

const TextExtractor& glyph_ocr() {
  static const auto ocr = make_text_extractor("glyph");
  return *ocr;
}

const std::vector<synth::Item>& corpus() {
  static const auto items = synth::corpus(7);
  return items;
}

const std::vector<LocalIndexEntry>& corpus_entries() {
  static const auto entries = [] {
    std::vector<LocalIndexEntry> out;
    for (const auto& it : corpus()) out.push_back(make_entry(it.id, it.image, glyph_ocr()));
    return out;
  }();
  return entries;
}

const synth::Item& corpus_item(const std::string& id) {
  static const auto by_id = [] {
    std::map<std::string, const synth::Item*> m;
    for (const auto& it : corpus()) m[it.id] = &it;
    return m;
  }();
  return *by_id.at(id);
}

LocalIndex index_of(std::vector<LocalIndexEntry> entries, const std::vector<const RasterImage*>& images) {
  std::vector<std::string> ids;
  for (const auto& e : entries) ids.push_back(e.id);
  LocalIndex index(std::move(entries));
  for (std::size_t i = 0; i < ids.size() && i < images.size(); ++i) index.attach_image(ids[i], *images[i]);
  return index;
}

std::shared_ptr<const LocalIndex> corpus_index() {
  static const auto index = [] {
    std::vector<const RasterImage*> images;
    for (const auto& it : corpus()) images.push_back(&it.image);
    return std::make_shared<const LocalIndex>(index_of(corpus_entries(), images));
  }();
  return index;
}

namespace {

std::vector<SearchHit> filtered(const std::vector<SearchHit>& hits, std::size_t n, const SearchOptions& o) {
  std::vector<SearchHit> out;
  for (const auto& h : hits) {
    if (out.size() == n) break;
    if (std::find(o.exclude_ids.begin(), o.exclude_ids.end(), h.hit_id) != o.exclude_ids.end()) continue;
    out.push_back(h);
  }
  return out;
}

}  // namespace

std::vector<SearchHit> CannedProvider::image_search(const RasterImage&, std::size_t n, const SearchOptions& o) const {
  ++calls;
  if (fail) throw Error(ErrorCode::ProviderUnavailable, "canned outage");
  return filtered(image_hits, n, o);
}

std::vector<SearchHit> CannedProvider::text_search(std::string_view, std::size_t n, const SearchOptions& o) const {
  ++calls;
  if (fail) throw Error(ErrorCode::ProviderUnavailable, "canned outage");
  return filtered(text_hits, n, o);
}

}  // namespace memetect::testing
