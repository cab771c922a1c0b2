#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "memetect/decompose.hpp"
#include "memetect/errors.hpp"
#include "memetect/relate.hpp"

using namespace memetect;
using memetect::testing::corpus_index;
using memetect::testing::corpus_item;
using memetect::testing::glyph_ocr;

namespace {

struct Probe {
  RasterImage image;
  std::vector<TextRegion> regions;
  CandidateContext ctx;
  explicit Probe(RasterImage img) : image(std::move(img)) {
    regions = decompose::detect_text_regions(image, glyph_ocr());
    ctx = make_context(image, regions);
  }
  Probe(const Probe&) = delete;
};

SearchHit hit_for(const Probe& c, const std::string& want, const std::string& self) {
  SearchOptions opt;
  opt.exclude_ids = {self};
  opt.query_text_boxes = c.ctx.text_boxes;
  const RasterImage& query = c.image;
  for (auto& h : corpus_index()->image_search(query, 20, opt))
    if (h.hit_id == want) return h;
  ADD_FAILURE() << want << " not returned";
  return {};
}

}  // namespace

TEST(Relate, RecaptionedTemplateIsRelatedButDistinct) {
  const Probe c(corpus_item("cm-00-0").image);
  const auto view = decompose::full_view(c.image);
  const auto j = judge(view, c.ctx, hit_for(c, "cm-00-1", "cm-00-0"));
  ASSERT_EQ(j.matches.size(), 1u);
  EXPECT_EQ(j.matches[0].kind, ElementKind::Background);
  EXPECT_GE(j.matches[0].similarity, Thresholds{}.tau_share);
  EXPECT_GE(j.novelty.text_novelty, Thresholds{}.tau_novel);
  EXPECT_TRUE(j.related_but_distinct);
  EXPECT_FALSE(j.identical);
  EXPECT_EQ(j.decided_by, DecidedBy::Automated);
}

TEST(Relate, ExactRepostIsIdentical) {
  const Probe c(corpus_item("viral-00-0").image);
  const auto j = judge(decompose::full_view(c.image), c.ctx, hit_for(c, "viral-00-1", "viral-00-0"));
  EXPECT_TRUE(j.identical);
  EXPECT_FALSE(j.related_but_distinct);
  EXPECT_TRUE(viral_check({j}));
}

TEST(Relate, TextViewMatchesByContainment) {
  const Probe c(corpus_item("mt-00-0").image);
  const auto view = decompose::extract_text(c.regions);
  SearchHit h;
  h.hit_id = "x";
  h.text = view.text + " plus extra words";
  auto j = judge(view, c.ctx, h);
  ASSERT_EQ(j.matches.size(), 1u);
  EXPECT_EQ(j.matches[0].kind, ElementKind::Text);
  h.text = "completely different";
  EXPECT_TRUE(judge(view, c.ctx, h).matches.empty());
}

TEST(Relate, ExternalHitUsesProviderDistance) {
  const Probe c(synth::photo(40));
  const auto view = decompose::full_view(c.image);
  SearchHit h;
  h.hit_id = "ext";
  h.origin = Origin::ExternalService;
  h.text = "some other caption";
  h.visual_distance = 0.1;
  EXPECT_EQ(judge(view, c.ctx, h).matches.size(), 1u);
  h.visual_distance = 0.3;
  EXPECT_TRUE(judge(view, c.ctx, h).matches.empty());
}

TEST(Relate, HumanDecisionOverrides) {
  const Probe c(synth::photo(41));
  SearchHit h;
  h.hit_id = "h";
  h.visual_distance = 0.9;
  const auto view = decompose::full_view(c.image);
  const auto j = judge_human(view, c.ctx, h, HumanDecision::RelatedButDistinct);
  EXPECT_TRUE(j.related_but_distinct);
  EXPECT_EQ(j.decided_by, DecidedBy::Human);
  EXPECT_TRUE(judge_human(view, c.ctx, h, HumanDecision::Identical).identical);
  const auto u = judge_human(view, c.ctx, h, HumanDecision::Unrelated);
  EXPECT_FALSE(u.identical || u.related_but_distinct);
}

TEST(Relate, ViralCheck) {
  RelatednessJudgement same, related, none;
  same.identical = true;
  related.related_but_distinct = true;
  EXPECT_FALSE(viral_check({}));
  EXPECT_FALSE(viral_check({none}));
  EXPECT_TRUE(viral_check({same, none}));
  EXPECT_FALSE(viral_check({same, related}));
}

TEST(Relate, ElementKinds) {
  EXPECT_EQ(element_kind_for(ViewKind::FullImage), ElementKind::Background);
  EXPECT_EQ(element_kind_for(ViewKind::Segment), ElementKind::Segment);
  EXPECT_EQ(element_kind_for(ViewKind::SuperimposedElement), ElementKind::SuperimposedElement);
  EXPECT_EQ(element_kind_for(ViewKind::ExtractedText), ElementKind::Text);
  EXPECT_EQ(human_decision_from_string(to_string(HumanDecision::Identical)), HumanDecision::Identical);
  EXPECT_THROW(human_decision_from_string("maybe"), Error);
}

TEST(Distance, RefineOnlyMovesTowardTheEvidence) {
  MatchReport strong;
  strong.count = 200;
  strong.features_a = strong.features_b = 250;
  MatchReport weak;
  weak.count = 0;
  weak.features_a = weak.features_b = 250;
  EXPECT_LE(refine_distance(0.4, strong), 0.4);
  EXPECT_GE(refine_distance(0.1, weak), 0.1);
  MatchReport plain;  // too few features to say anything
  plain.features_a = 2;
  EXPECT_DOUBLE_EQ(refine_distance(0.3, plain), 0.3);
}
