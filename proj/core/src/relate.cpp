#include "memetect/relate.hpp"

#include <algorithm>
#include <cmath>

#include "memetect/errors.hpp"
#include "memetect/fingerprint.hpp"
#include "memetect/text.hpp"

namespace memetect {

std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Background: return "Background";
    case ElementKind::Segment: return "Segment";
    case ElementKind::SuperimposedElement: return "SuperimposedElement";
    case ElementKind::Text: return "Text";
  }
  return "Background";
}

std::string_view to_string(DecidedBy d) { return d == DecidedBy::Human ? "Human" : "Automated"; }

std::string_view to_string(HumanDecision d) {
  switch (d) {
    case HumanDecision::RelatedButDistinct: return "related_but_distinct";
    case HumanDecision::Identical: return "identical";
    case HumanDecision::Unrelated: return "unrelated";
  }
  return "unrelated";
}

ElementKind element_kind_from_string(std::string_view s) {
  for (auto k : {ElementKind::Background, ElementKind::Segment, ElementKind::SuperimposedElement, ElementKind::Text})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::InvalidInput, "unknown element kind: " + std::string(s));
}

DecidedBy decided_by_from_string(std::string_view s) {
  if (s == "Automated") return DecidedBy::Automated;
  if (s == "Human") return DecidedBy::Human;
  throw Error(ErrorCode::InvalidInput, "unknown decided_by: " + std::string(s));
}

HumanDecision human_decision_from_string(std::string_view s) {
  for (auto d : {HumanDecision::RelatedButDistinct, HumanDecision::Identical, HumanDecision::Unrelated})
    if (to_string(d) == s) return d;
  throw Error(ErrorCode::InvalidInput, "unknown judgement: " + std::string(s));
}

ElementKind element_kind_for(ViewKind v) {
  switch (v) {
    case ViewKind::Segment: return ElementKind::Segment;
    case ViewKind::SuperimposedElement: return ElementKind::SuperimposedElement;
    case ViewKind::ExtractedText: return ElementKind::Text;
    default: return ElementKind::Background;
  }
}

CandidateContext make_context(const RasterImage& image, const std::vector<TextRegion>& regions) {
  CandidateContext c;
  c.image = &image;
  c.dhash = dhash64(image);
  c.text = decompose::extract_text(regions).text;
  for (const auto& r : regions) c.text_boxes.push_back(r.bbox);
  return c;
}

namespace {

Rect view_origin(const DerivedView& view) { return view.source.empty() ? Rect{} : view.source.front(); }

std::optional<MemeticElementMatch> find_match(const DerivedView& view, const SearchHit& hit, const Thresholds& t) {
  const ElementKind kind = element_kind_for(view.kind);
  MemeticElementMatch m;
  m.kind = kind;

  if (kind == ElementKind::Text) {
    const double c = text::containment(view.text, hit.text);
    if (c < t.text_containment) return std::nullopt;
    m.candidate_text = view.text;
    m.hit_text = hit.text;
    m.similarity = c;
    return m;
  }

  const Rect origin = view_origin(view);
  if (!hit.evidence) {
    // External hit: the provider's own similarity is all we have.
    m.similarity = 1.0 - hit.visual_distance;
    if (m.similarity < t.tau_share) return std::nullopt;
    m.candidate_region = origin;
    return m;
  }

  const MatchEvidence& ev = *hit.evidence;
  m.candidate_region = ev.query_region.translated(origin.x, origin.y);
  m.hit_region = ev.hit_region;
  if (kind == ElementKind::Background) {
    double coverage = 0.0;
    if (ev.inliers >= t.tau_feat && ev.query_keypoints.area() > 0) {
      coverage = static_cast<double>(ev.query_region.area()) / static_cast<double>(ev.query_keypoints.area());
    }
    // Plain crops carry too few keypoints to judge; fall back to the hash.
    const double hash_similarity =
        ev.query_features < static_cast<std::size_t>(t.tau_feat) ? 1.0 - ev.hash_distance / 64.0 : 0.0;
    m.similarity = std::min(1.0, std::max(coverage, hash_similarity));
    if (m.similarity < t.tau_share) return std::nullopt;
    if (coverage < hash_similarity) m.candidate_region = origin;
    return m;
  }

  if (ev.inliers < t.tau_feat) return std::nullopt;
  m.similarity = ev.ratio;
  return m;
}

double visual_novelty(const DerivedView& view, const CandidateContext& cand, const SearchHit& hit,
                      const std::vector<MemeticElementMatch>& matches, const Thresholds& t) {
  const auto hit_image = hit.image();
  if (!cand.image || !hit_image) return 0.0;
  const RasterImage& c = *cand.image;
  const RasterImage& h = *hit_image;
  const Rect origin = view_origin(view);
  std::optional<Similarity> to_hit;
  if (view.kind != ViewKind::ExtractedText && hit.evidence && hit.evidence->query_to_hit) to_hit = hit.evidence->query_to_hit;
  const double sx = static_cast<double>(h.width()) / c.width();
  const double sy = static_cast<double>(h.height()) / c.height();

  auto excluded = [&](int x, int y) {
    for (const auto& r : cand.text_boxes)
      if (r.contains(x, y)) return true;
    for (const auto& m : matches)
      if (m.candidate_region.contains(x, y)) return true;
    return false;
  };

  long long considered = 0, novel = 0;
  for (int y = 0; y < c.height(); y += 2) {
    for (int x = 0; x < c.width(); x += 2) {
      if (excluded(x, y)) continue;
      double hx, hy;
      if (to_hit) {
        to_hit->apply(x - origin.x, y - origin.y, hx, hy);
      } else {
        hx = (x + 0.5) * sx;
        hy = (y + 0.5) * sy;
      }
      const int ix = static_cast<int>(std::floor(hx));
      const int iy = static_cast<int>(std::floor(hy));
      bool in_hit_text = false;
      for (const auto& r : hit.text_boxes) in_hit_text = in_hit_text || r.contains(ix, iy);
      if (in_hit_text) continue;
      ++considered;
      if (ix < 0 || iy < 0 || ix >= h.width() || iy >= h.height()) {
        ++novel;  // candidate content the hit does not have
        continue;
      }
      const Rgba a = c.at(x, y);
      const Rgba b = h.at(ix, iy);
      const int diff = std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)});
      if (diff > t.pixel_difference) ++novel;
    }
  }
  return considered == 0 ? 0.0 : static_cast<double>(novel) / static_cast<double>(considered);
}

bool is_identical(const DerivedView& view, const CandidateContext& cand, const SearchHit& hit, double text_novelty,
                  const Thresholds& t) {
  if (text_novelty > t.identity_text) return false;
  const double hash_distance =
      hit.fingerprint ? normalized_hamming(cand.dhash, hit.fingerprint->dhash) : hit.visual_distance;
  if (hash_distance <= t.identity_distance) return true;
  // Pure recrop: the same pixels framed differently.
  if (view.kind != ViewKind::FullImage || !hit.evidence || !hit.fingerprint || !cand.image) return false;
  const auto& ev = *hit.evidence;
  const double cand_area = static_cast<double>(cand.image->width()) * cand.image->height();
  const double hit_area = static_cast<double>(hit.fingerprint->features.width) * hit.fingerprint->features.height;
  return ev.inliers >= t.tau_feat && hit_area > 0 && ev.query_region.area() > t.recrop_coverage * cand_area &&
         ev.hit_region.area() > t.recrop_coverage * hit_area;
}

}  // namespace

RelatednessJudgement judge(const DerivedView& view, const CandidateContext& candidate, const SearchHit& hit,
                           const Thresholds& t) {
  RelatednessJudgement j;
  j.hit_id = hit.hit_id;
  if (auto m = find_match(view, hit, t)) j.matches.push_back(std::move(*m));
  j.novelty.text_novelty = text::normalized_edit_distance(candidate.text, hit.text);
  j.identical = is_identical(view, candidate, hit, j.novelty.text_novelty, t);
  if (!j.matches.empty() && !j.identical) {
    j.novelty.visual_novelty = visual_novelty(view, candidate, hit, j.matches, t);
    j.related_but_distinct =
        j.novelty.text_novelty >= t.tau_novel || j.novelty.visual_novelty >= t.tau_novel_visual;
  }
  return j;
}

RelatednessJudgement judge_human(const DerivedView& view, const CandidateContext& candidate, const SearchHit& hit,
                                 HumanDecision decision, const Thresholds& t) {
  RelatednessJudgement j = judge(view, candidate, hit, t);
  j.decided_by = DecidedBy::Human;
  j.related_but_distinct = decision == HumanDecision::RelatedButDistinct;
  j.identical = decision == HumanDecision::Identical;
  return j;
}

bool viral_check(const std::vector<RelatednessJudgement>& judgements) {
  const bool any_identical = std::any_of(judgements.begin(), judgements.end(), [](const auto& j) { return j.identical; });
  const bool any_related =
      std::any_of(judgements.begin(), judgements.end(), [](const auto& j) { return j.related_but_distinct; });
  return any_identical && !any_related;
}

}  // namespace memetect
