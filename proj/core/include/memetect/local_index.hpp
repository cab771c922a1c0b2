#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "memetect/bktree.hpp"
#include "memetect/digest.hpp"
#include "memetect/fingerprint.hpp"
#include "memetect/manifest.hpp"
#include "memetect/ocr.hpp"
#include "memetect/search.hpp"

namespace memetect {

struct LocalIndexEntry {
  std::string id;
  std::filesystem::path path;
  std::string subset;
  std::string label;
  Digest digest;                     // content digest of the decoded pixels
  std::uint64_t dhash = 0;
  FeatureSet features;               // text regions masked out
  std::string text;                  // extracted, normalized caption
  std::vector<TextRegion> regions;

  friend bool operator==(const LocalIndexEntry&, const LocalIndexEntry&) = default;
};

struct BuildReport {
  std::size_t indexed = 0;
  std::vector<std::string> warnings;  // one per excluded file
};

/// Fingerprints one decoded image the way index_build does.
LocalIndexEntry make_entry(std::string id, const RasterImage& image, const TextExtractor& ocr);

/// Deterministic two-stage corpus index: BK-tree over dhash64 for the
/// shortlist, multi-index voting over ORB descriptor chunks for recomposed
/// items, then RANSAC verification. Immutable once constructed; safe for
/// concurrent readers.
class LocalIndex final : public SearchProvider {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  LocalIndex();
  explicit LocalIndex(std::vector<LocalIndexEntry> entries);
  ~LocalIndex() override;
  LocalIndex(LocalIndex&&) noexcept;
  LocalIndex& operator=(LocalIndex&&) noexcept;

  static LocalIndex build(const std::vector<ManifestRecord>& manifest, const TextExtractor& ocr,
                          BuildReport* report = nullptr);

  void save(const std::filesystem::path& path) const;
  std::vector<std::uint8_t> serialize() const;
  static LocalIndex load(const std::filesystem::path& path);
  static LocalIndex deserialize(std::span<const std::uint8_t> bytes);

  /// In-memory pixels for entries that have no readable path (tests, synth).
  void attach_image(const std::string& id, RasterImage image);

  const std::vector<LocalIndexEntry>& entries() const;
  const LocalIndexEntry* find(std::string_view id) const;
  std::size_t size() const { return entries().size(); }

  /// Stage 1 alone: entry indices of the k nearest hashes, (distance, index) order.
  std::vector<BkTree::Result> hash_stage(std::uint64_t query, std::size_t k) const;

  std::string name() const override { return "local"; }
  std::vector<SearchHit> image_search(const RasterImage& query, std::size_t n,
                                      const SearchOptions& options = {}) const override;
  std::vector<SearchHit> text_search(std::string_view query, std::size_t n,
                                     const SearchOptions& options = {}) const override;

 private:
  struct State;
  std::shared_ptr<State> state_;  // shared with image loaders handed out in hits
};

}  // namespace memetect
