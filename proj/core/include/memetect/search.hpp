#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memetect/fingerprint.hpp"
#include "memetect/image.hpp"

namespace memetect {

enum class Origin { LocalCorpus, ExternalService };
std::string_view to_string(Origin o);

/// How a hit was matched against the query image (local provider only).
struct MatchEvidence {
  int hash_distance = 64;     // bits
  int inliers = 0;
  double ratio = 0.0;         // inliers / min(feature counts)
  Rect query_region;          // inlier bbox in the query
  Rect hit_region;            // inlier bbox in the hit
  Rect query_keypoints;       // bbox of all query keypoints
  std::size_t query_features = 0;
  std::optional<Similarity> query_to_hit;
};

struct SearchHit {
  std::string hit_id;
  double visual_distance = 1.0;  // [0, 1], 0 = identical
  double text_score = 0.0;       // containment, text search only
  std::string text;              // normalized caption of the hit
  Origin origin = Origin::LocalCorpus;
  std::string source_url;
  std::vector<Rect> text_boxes;  // hit text regions, hit coordinates
  std::optional<MatchEvidence> evidence;
  std::shared_ptr<const Fingerprint> fingerprint;
  std::function<std::shared_ptr<const RasterImage>()> load_image;  // may be empty

  std::shared_ptr<const RasterImage> image() const { return load_image ? load_image() : nullptr; }
};

struct SearchOptions {
  std::vector<std::string> exclude_ids;  // never returned (self-exclusion)
  std::vector<Rect> query_text_boxes;    // masked out of the query's features
};

/// IS(.) and TS(.). Image results ascend by visual_distance, text results
/// descend by text_score; at most n of either.
class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  virtual std::string name() const = 0;
  virtual bool supports_image() const { return true; }
  virtual bool supports_text() const { return true; }
  virtual std::vector<SearchHit> image_search(const RasterImage& query, std::size_t n,
                                              const SearchOptions& options = {}) const = 0;
  virtual std::vector<SearchHit> text_search(std::string_view query, std::size_t n,
                                             const SearchOptions& options = {}) const = 0;
};

inline constexpr std::size_t kDefaultResults = 50;
inline constexpr double kTextMatchThreshold = 0.6;

/// Hash distance refined by the feature-match ratio r. A strong match
/// (r >= 0.5) can only pull the distance down; a weak one only pushes it up.
/// Images too plain to carry kMinInliers features keep the hash distance.
double refine_distance(double hash_distance, const MatchReport& match);

/// The refined distance between two fingerprints, as image_search scores it.
double visual_distance(const Fingerprint& a, const Fingerprint& b);

}  // namespace memetect
