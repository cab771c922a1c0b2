#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "memetect/decompose.hpp"
#include "memetect/search.hpp"

namespace memetect {

enum class ElementKind { Background, Segment, SuperimposedElement, Text };
enum class DecidedBy { Automated, Human };
enum class HumanDecision { RelatedButDistinct, Identical, Unrelated };

std::string_view to_string(ElementKind k);
std::string_view to_string(DecidedBy d);
std::string_view to_string(HumanDecision d);
ElementKind element_kind_from_string(std::string_view s);
DecidedBy decided_by_from_string(std::string_view s);
HumanDecision human_decision_from_string(std::string_view s);

/// Which element kind a view can evidence.
ElementKind element_kind_for(ViewKind v);

struct Thresholds {
  double tau_share = 0.85;          // Background similarity
  double tau_novel = 0.30;          // text edit distance
  double tau_novel_visual = 0.20;   // fraction of differing pixels
  int tau_feat = 25;                // consistent matches for Segment / SuperimposedElement
  double text_containment = 0.80;   // Text element
  double identity_distance = 0.02;  // hash distance for "identical"
  double identity_text = 0.05;      // text edit distance for "identical"
  double recrop_coverage = 0.90;    // inlier coverage of both images for a pure recrop
  int pixel_difference = 40;        // per-pixel max channel difference counted as novel

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct MemeticElementMatch {
  ElementKind kind = ElementKind::Background;
  Rect candidate_region;  // candidate coordinates; empty for Text
  Rect hit_region;
  std::string candidate_text;  // Text only
  std::string hit_text;
  double similarity = 0.0;
};

struct NoveltyEvidence {
  double text_novelty = 0.0;
  double visual_novelty = 0.0;
};

struct RelatednessJudgement {
  std::string hit_id;
  bool related_but_distinct = false;
  bool identical = false;
  std::vector<MemeticElementMatch> matches;
  NoveltyEvidence novelty;
  DecidedBy decided_by = DecidedBy::Automated;
};

/// The full candidate the view was derived from.
struct CandidateContext {
  const RasterImage* image = nullptr;
  std::uint64_t dhash = 0;
  std::string text;              // extracted, normalized
  std::vector<Rect> text_boxes;  // candidate coordinates
};

CandidateContext make_context(const RasterImage& image, const std::vector<TextRegion>& regions);

/// Automated judgement; deterministic for fixed thresholds.
RelatednessJudgement judge(const DerivedView& view, const CandidateContext& candidate, const SearchHit& hit,
                           const Thresholds& t = {});

/// Same evidence, but the recorded human decision sets the outcome.
RelatednessJudgement judge_human(const DerivedView& view, const CandidateContext& candidate, const SearchHit& hit,
                                 HumanDecision decision, const Thresholds& t = {});

/// True iff some judgement is identical and none is related-but-distinct.
bool viral_check(const std::vector<RelatednessJudgement>& judgements);

}  // namespace memetect
