#include "memetect/local_index.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <set>
#include <tuple>
#include <unordered_map>

#include "binio.hpp"
#include "memetect/decompose.hpp"
#include "memetect/errors.hpp"
#include "memetect/files.hpp"
#include "memetect/text.hpp"

namespace memetect {

std::string_view to_string(Origin o) { return o == Origin::LocalCorpus ? "LocalCorpus" : "ExternalService"; }

double refine_distance(double hash_distance, const MatchReport& match) {
  if (std::min(match.features_a, match.features_b) < static_cast<std::size_t>(kMinInliers)) return hash_distance;
  const double feature_distance = 1.0 - match.ratio();
  return match.ratio() >= 0.5 ? std::min(hash_distance, feature_distance) : std::max(hash_distance, feature_distance);
}

double visual_distance(const Fingerprint& a, const Fingerprint& b) {
  return refine_distance(normalized_hamming(a.dhash, b.dhash), match_features(a.features, b.features));
}

LocalIndexEntry make_entry(std::string id, const RasterImage& image, const TextExtractor& ocr) {
  LocalIndexEntry e;
  e.id = std::move(id);
  e.regions = decompose::detect_text_regions(image, ocr);
  e.text = decompose::extract_text(e.regions).text;
  std::vector<Rect> boxes;
  for (const auto& r : e.regions) boxes.push_back(r.bbox);
  e.digest = image.content_digest();
  e.dhash = dhash64(image);
  e.features = extract_features(image, boxes);
  return e;
}

namespace {

constexpr std::string_view kMagic = "MEMETECTIDX";
constexpr int kChunks = 16;
constexpr int kMinVotes = 4;

std::uint16_t chunk(const Descriptor& d, int j) {
  return static_cast<std::uint16_t>(d[2 * j] | d[2 * j + 1] << 8);
}

}  // namespace

struct LocalIndex::State {
  std::vector<LocalIndexEntry> entries;
  std::unordered_map<std::string, std::uint32_t> by_id;
  BkTree tree;
  std::array<std::vector<std::pair<std::uint16_t, std::uint32_t>>, kChunks> tables;  // sorted
  std::unordered_map<std::string, std::vector<std::uint32_t>> postings;            // content term -> entries
  std::vector<std::shared_ptr<const Fingerprint>> fingerprints;

  mutable std::mutex mu;
  mutable std::unordered_map<std::string, std::shared_ptr<const RasterImage>> images;

  explicit State(std::vector<LocalIndexEntry> es) : entries(std::move(es)) {
    for (std::uint32_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (!by_id.emplace(e.id, i).second) throw Error(ErrorCode::InvalidInput, "duplicate index id: " + e.id);
      tree.insert(e.dhash, i);
      for (int j = 0; j < kChunks; ++j)
        for (const auto& d : e.features.descriptors) tables[j].emplace_back(chunk(d, j), i);
      for (const auto& term : text::content_terms(e.text)) postings[term].push_back(i);
      fingerprints.push_back(std::make_shared<const Fingerprint>(Fingerprint{e.dhash, e.features}));
    }
    for (auto& t : tables) {
      std::sort(t.begin(), t.end());
      t.erase(std::unique(t.begin(), t.end()), t.end());
    }
  }

  std::shared_ptr<const RasterImage> image(std::uint32_t i) const {
    const auto& e = entries[i];
    {
      std::lock_guard lock(mu);
      if (auto it = images.find(e.id); it != images.end()) return it->second;
    }
    std::shared_ptr<const RasterImage> img;
    try {
      img = std::make_shared<const RasterImage>(load_image(e.path));
    } catch (const Error&) {
      return nullptr;  // file moved since indexing; evidence without pixels
    }
    std::lock_guard lock(mu);
    return images.emplace(e.id, img).first->second;
  }

  std::vector<std::uint32_t> vote(const FeatureSet& q, const std::set<std::uint32_t>& excluded, std::size_t k) const {
    std::vector<int> votes(entries.size(), 0);
    std::vector<int> stamp(entries.size(), -1);
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (int j = 0; j < kChunks; ++j) {
        const auto key = chunk(q.descriptors[i], j);
        auto lo = std::lower_bound(tables[j].begin(), tables[j].end(), std::pair<std::uint16_t, std::uint32_t>{key, 0});
        for (auto it = lo; it != tables[j].end() && it->first == key; ++it) {
          if (stamp[it->second] == static_cast<int>(i)) continue;
          stamp[it->second] = static_cast<int>(i);
          ++votes[it->second];
        }
      }
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t e = 0; e < entries.size(); ++e)
      if (votes[e] >= kMinVotes && !excluded.count(e)) out.push_back(e);
    std::sort(out.begin(), out.end(), [&](auto a, auto b) { return std::tie(votes[b], a) < std::tie(votes[a], b); });
    if (out.size() > k) out.resize(k);
    return out;
  }

  SearchHit hit_for(std::uint32_t i, const std::shared_ptr<const State>& self) const {
    const auto& e = entries[i];
    SearchHit h;
    h.hit_id = e.id;
    h.text = e.text;
    h.origin = Origin::LocalCorpus;
    h.source_url = e.path.empty() ? std::string() : "file://" + e.path.generic_string();
    for (const auto& r : e.regions) h.text_boxes.push_back(r.bbox);
    h.fingerprint = fingerprints[i];
    h.load_image = [self, i]() { return self->image(i); };
    return h;
  }

  std::set<std::uint32_t> excluded(const SearchOptions& options) const {
    std::set<std::uint32_t> out;
    for (const auto& id : options.exclude_ids)
      if (auto it = by_id.find(id); it != by_id.end()) out.insert(it->second);
    return out;
  }
};

LocalIndex::LocalIndex() : LocalIndex(std::vector<LocalIndexEntry>{}) {}
LocalIndex::LocalIndex(std::vector<LocalIndexEntry> entries) : state_(std::make_shared<State>(std::move(entries))) {}
LocalIndex::~LocalIndex() = default;
LocalIndex::LocalIndex(LocalIndex&&) noexcept = default;
LocalIndex& LocalIndex::operator=(LocalIndex&&) noexcept = default;

LocalIndex LocalIndex::build(const std::vector<ManifestRecord>& manifest, const TextExtractor& ocr, BuildReport* report) {
  std::vector<LocalIndexEntry> entries;
  BuildReport local;
  for (const auto& rec : manifest) {
    try {
      const RasterImage img = load_image(rec.path);
      auto e = make_entry(rec.id, img, ocr);
      e.path = std::filesystem::absolute(rec.path).lexically_normal();
      e.subset = rec.subset;
      e.label = rec.label;
      entries.push_back(std::move(e));
    } catch (const Error& err) {
      local.warnings.push_back(rec.id + ": " + err.what());
    }
  }
  local.indexed = entries.size();
  if (report) *report = std::move(local);
  return LocalIndex(std::move(entries));
}

std::vector<std::uint8_t> LocalIndex::serialize() const {
  detail::Writer w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic.data()), kMagic.size()));
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(state_->entries.size()));
  for (const auto& e : state_->entries) {
    w.str(e.id);
    w.str(e.path.generic_string());
    w.str(e.subset);
    w.str(e.label);
    w.raw(e.digest.bytes());
    w.u64(e.dhash);
    w.str(e.text);
    w.i32(e.features.width);
    w.i32(e.features.height);
    w.u32(static_cast<std::uint32_t>(e.features.size()));
    for (std::size_t i = 0; i < e.features.size(); ++i) {
      w.f32(e.features.points[i].x);
      w.f32(e.features.points[i].y);
      w.raw(e.features.descriptors[i]);
    }
    w.u32(static_cast<std::uint32_t>(e.regions.size()));
    for (const auto& r : e.regions) {
      w.i32(r.bbox.x);
      w.i32(r.bbox.y);
      w.i32(r.bbox.w);
      w.i32(r.bbox.h);
      w.str(r.text);
      w.f64(r.confidence);
    }
  }
  const Digest check = Digest::of(std::span<const std::uint8_t>(w.bytes()));
  w.raw(check.bytes());
  return std::move(w.bytes());
}

LocalIndex LocalIndex::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 4 + 32 ||
      !std::equal(kMagic.begin(), kMagic.end(), reinterpret_cast<const char*>(bytes.data()))) {
    throw Error(ErrorCode::InvalidInput, "not a memetect index file");
  }
  detail::Reader r(bytes.first(bytes.size() - 32));
  r.raw(kMagic.size());
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::FormatVersion, "index format version " + std::to_string(version) + ", expected " +
                                              std::to_string(kFormatVersion));
  }
  std::array<std::uint8_t, 32> stored{};
  std::copy(bytes.end() - 32, bytes.end(), stored.begin());
  if (Digest::of(bytes.first(bytes.size() - 32)) != Digest(stored)) {
    throw Error(ErrorCode::InvalidInput, "index file checksum mismatch");
  }

  std::vector<LocalIndexEntry> entries(r.count(32));
  for (auto& e : entries) {
    e.id = r.str();
    e.path = r.str();
    e.subset = r.str();
    e.label = r.str();
    std::array<std::uint8_t, 32> d{};
    auto raw = r.raw(32);
    std::copy(raw.begin(), raw.end(), d.begin());
    e.digest = Digest(d);
    e.dhash = r.u64();
    e.text = r.str();
    e.features.width = r.i32();
    e.features.height = r.i32();
    const auto nf = r.count(40);
    e.features.points.resize(nf);
    e.features.descriptors.resize(nf);
    for (std::uint32_t i = 0; i < nf; ++i) {
      e.features.points[i].x = r.f32();
      e.features.points[i].y = r.f32();
      auto desc = r.raw(32);
      std::copy(desc.begin(), desc.end(), e.features.descriptors[i].begin());
    }
    e.regions.resize(r.count(28));
    for (auto& reg : e.regions) {
      reg.bbox.x = r.i32();
      reg.bbox.y = r.i32();
      reg.bbox.w = r.i32();
      reg.bbox.h = r.i32();
      reg.text = r.str();
      reg.confidence = r.f64();
    }
  }
  if (r.remaining() != 0) throw Error(ErrorCode::InvalidInput, "trailing bytes in index file");
  return LocalIndex(std::move(entries));
}

void LocalIndex::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

LocalIndex LocalIndex::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return deserialize(bytes);
}

void LocalIndex::attach_image(const std::string& id, RasterImage image) {
  std::lock_guard lock(state_->mu);
  state_->images[id] = std::make_shared<const RasterImage>(std::move(image));
}

const std::vector<LocalIndexEntry>& LocalIndex::entries() const { return state_->entries; }

const LocalIndexEntry* LocalIndex::find(std::string_view id) const {
  auto it = state_->by_id.find(std::string(id));
  return it == state_->by_id.end() ? nullptr : &state_->entries[it->second];
}

std::vector<BkTree::Result> LocalIndex::hash_stage(std::uint64_t query, std::size_t k) const {
  return state_->tree.nearest(query, k);
}

std::vector<SearchHit> LocalIndex::image_search(const RasterImage& query, std::size_t n,
                                                const SearchOptions& options) const {
  if (n == 0) throw Error(ErrorCode::InvalidInput, "result count must be at least 1");
  const State& s = *state_;
  const auto excluded = s.excluded(options);
  const std::uint64_t qhash = dhash64(query);
  const FeatureSet qfeat = extract_features(query, options.query_text_boxes);

  // Stage 1 (hash shortlist) and stage 2 (descriptor votes), each capped at 3n.
  std::set<std::uint32_t> shortlist;
  std::size_t taken = 0;
  for (const auto& r : s.tree.nearest(qhash, 3 * n + excluded.size())) {
    if (excluded.count(r.id) || taken == 3 * n) continue;
    shortlist.insert(r.id);
    ++taken;
  }
  for (auto e : s.vote(qfeat, excluded, 3 * n)) shortlist.insert(e);

  struct Scored {
    double distance;
    int bits;
    std::uint32_t index;
    MatchReport match;
  };
  std::vector<Scored> scored;
  for (auto i : shortlist) {
    const auto& e = s.entries[i];
    MatchReport m = match_features(qfeat, e.features);
    const int bits = hamming(qhash, e.dhash);
    scored.push_back({refine_distance(bits / 64.0, m), bits, i, std::move(m)});
  }
  std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
    return std::tie(a.distance, a.bits, s.entries[a.index].id) < std::tie(b.distance, b.bits, s.entries[b.index].id);
  });
  if (scored.size() > n) scored.resize(n);

  std::vector<SearchHit> hits;
  for (const auto& sc : scored) {
    SearchHit h = s.hit_for(sc.index, state_);
    h.visual_distance = std::clamp(sc.distance, 0.0, 1.0);
    MatchEvidence ev;
    ev.hash_distance = sc.bits;
    ev.inliers = sc.match.count;
    ev.ratio = sc.match.ratio();
    ev.query_region = sc.match.inliers_a;
    ev.hit_region = sc.match.inliers_b;
    ev.query_keypoints = sc.match.keypoints_a;
    ev.query_features = sc.match.features_a;
    ev.query_to_hit = sc.match.a_to_b;
    h.evidence = ev;
    hits.push_back(std::move(h));
  }
  return hits;
}

std::vector<SearchHit> LocalIndex::text_search(std::string_view query, std::size_t n,
                                               const SearchOptions& options) const {
  if (n == 0) throw Error(ErrorCode::InvalidInput, "result count must be at least 1");
  const State& s = *state_;
  const auto terms = text::content_terms(query);
  if (terms.empty()) return {};
  const auto excluded = s.excluded(options);

  std::set<std::uint32_t> candidates;
  for (const auto& t : terms)
    if (auto it = s.postings.find(t); it != s.postings.end()) candidates.insert(it->second.begin(), it->second.end());

  std::vector<std::pair<double, std::uint32_t>> scored;
  for (auto i : candidates) {
    if (excluded.count(i)) continue;
    const double score = text::containment(query, s.entries[i].text);
    if (score >= kTextMatchThreshold) scored.emplace_back(score, i);
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return s.entries[a.second].id < s.entries[b.second].id;
  });
  if (scored.size() > n) scored.resize(n);

  std::vector<SearchHit> hits;
  for (const auto& [score, i] : scored) {
    SearchHit h = s.hit_for(i, state_);
    h.text_score = score;
    h.visual_distance = 1.0;  // not compared visually
    hits.push_back(std::move(h));
  }
  return hits;
}

}  // namespace memetect
