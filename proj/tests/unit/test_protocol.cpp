#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "memetect/errors.hpp"
#include "memetect/protocol.hpp"

using namespace memetect;
using memetect::testing::CannedProvider;
using memetect::testing::corpus_index;
using memetect::testing::corpus_item;
using memetect::testing::glyph_ocr;

namespace {

RunResult run(const std::string& id) { return run_protocol(id, corpus_item(id).image, *corpus_index(), glyph_ocr()); }

std::vector<int> path(const ProtocolTrace& t) {
  std::vector<int> out;
  for (const auto& s : t.steps) out.push_back(s.step);
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST(Graph, LegalAdvances) {
  EXPECT_TRUE(legal_advance(0, 1));
  EXPECT_TRUE(legal_advance(1, 2));
  for (int to : {3, 4, 5, 6}) EXPECT_TRUE(legal_advance(2, to));
  for (int from : {3, 4, 5}) EXPECT_TRUE(legal_advance(from, 6));
  EXPECT_TRUE(legal_advance(6, 7));
  EXPECT_TRUE(legal_advance(7, 8));
  EXPECT_FALSE(legal_advance(0, 2));
  EXPECT_FALSE(legal_advance(3, 4));
  EXPECT_FALSE(legal_advance(8, 0));
  EXPECT_FALSE(legal_advance(1, 1));
}

TEST(Graph, LegalVerdicts) {
  EXPECT_TRUE(legal_verdict(0, Outcome::NonMultimodal));
  for (auto o : {Outcome::CharacterMacro, Outcome::FormatMacro, Outcome::MemeticImage}) EXPECT_TRUE(legal_verdict(1, o));
  EXPECT_TRUE(legal_verdict(3, Outcome::CharacterMacro));
  EXPECT_TRUE(legal_verdict(4, Outcome::TransferredSymbols));
  EXPECT_TRUE(legal_verdict(5, Outcome::MemeticImage));
  EXPECT_TRUE(legal_verdict(6, Outcome::TransferredSymbols));
  EXPECT_TRUE(legal_verdict(7, Outcome::MemeticTrend));
  EXPECT_TRUE(legal_verdict(8, Outcome::NonMemeticImageText));
  EXPECT_FALSE(legal_verdict(2, Outcome::CharacterMacro));
  EXPECT_FALSE(legal_verdict(8, Outcome::MemeticTrend));
  EXPECT_FALSE(legal_verdict(1, Outcome::TransferredSymbols));
}

TEST(Outcomes, CodesRoundTrip) {
  for (auto o : kAllOutcomes) EXPECT_EQ(outcome_from_string(code(o)), o);
  EXPECT_EQ(code(Outcome::NonMemeticImageText), "nMIT");
  EXPECT_TRUE(is_meme(Outcome::MemeticTrend));
  EXPECT_FALSE(is_meme(Outcome::NonMultimodal));
  EXPECT_THROW(outcome_from_string("XX"), Error);
}

TEST(Engine, CharacterMacroStopsAtStepOne) {
  const auto r = run("cm-03-1");
  ASSERT_TRUE(r.verdict);
  EXPECT_EQ(r.verdict->outcome, Outcome::CharacterMacro);
  EXPECT_EQ(path(r.trace), (std::vector<int>{0, 1}));
  EXPECT_TRUE(validate_trace(r.trace).empty());
  EXPECT_EQ(r.trace.status, SessionStatus::Completed);
  EXPECT_EQ(r.trace.candidate_digest, corpus_item("cm-03-1").image.content_digest().hex());
}

TEST(Engine, NonMultimodalStopsAtStepZero) {
  const auto r = run("nmm-00-0");
  ASSERT_TRUE(r.verdict);
  EXPECT_EQ(r.verdict->outcome, Outcome::NonMultimodal);
  EXPECT_EQ(path(r.trace), (std::vector<int>{0}));
}

TEST(Engine, ViralRepostIsFlaggedNonMeme) {
  const auto r = run("viral-02-0");
  ASSERT_TRUE(r.verdict);
  EXPECT_EQ(r.verdict->outcome, Outcome::NonMemeticImageText);
  EXPECT_TRUE(r.verdict->viral_flag);
  EXPECT_EQ(r.trace.steps.back().step, 8);
}

TEST(Engine, TrendReachesStepSeven) {
  const auto r = run("mt-01-0");
  ASSERT_TRUE(r.verdict);
  EXPECT_EQ(r.verdict->outcome, Outcome::MemeticTrend);
  EXPECT_EQ(r.trace.steps.back().step, 7);
  EXPECT_TRUE(validate_trace(r.trace).empty());
}

TEST(Engine, EveryQueryIsRecorded) {
  const auto r = run("plain-01-0");
  ASSERT_TRUE(r.verdict);
  for (const auto& s : r.trace.steps) {
    if (s.step == 1) {
      ASSERT_EQ(s.queries.size(), 1u);
      EXPECT_EQ(s.queries[0].view, ViewKind::FullImage);
      EXPECT_EQ(s.queries[0].judgements.size(), s.queries[0].hits_reviewed);
    }
  }
}

TEST(Engine, ProviderOutageAbortsAndResumes) {
  const auto& item = corpus_item("cm-04-0");
  CannedProvider down;
  down.fail = true;
  const auto aborted = run_protocol(item.id, item.image, down, glyph_ocr());
  EXPECT_FALSE(aborted.verdict);
  EXPECT_EQ(aborted.trace.status, SessionStatus::Aborted);
  EXPECT_EQ(aborted.trace.steps.back().decision.kind, Decision::Kind::Abort);
  EXPECT_TRUE(validate_trace(aborted.trace).empty());

  auto engine = ProtocolEngine::resume(aborted.trace, item.image, *corpus_index(), glyph_ocr());
  EXPECT_EQ(engine.advance(), SessionStatus::Completed);
  ASSERT_TRUE(engine.trace().verdict);
  EXPECT_EQ(engine.trace().verdict->outcome, Outcome::CharacterMacro);
  EXPECT_TRUE(validate_trace(engine.trace()).empty());
}

TEST(Engine, ResumeRejectsOtherImageOrCompletedTrace) {
  const auto& item = corpus_item("cm-04-0");
  CannedProvider down;
  down.fail = true;
  const auto aborted = run_protocol(item.id, item.image, down, glyph_ocr());
  EXPECT_THROW(ProtocolEngine::resume(aborted.trace, corpus_item("cm-05-0").image, *corpus_index(), glyph_ocr()), Error);
  const auto done = run("cm-04-0");
  EXPECT_THROW(ProtocolEngine::resume(done.trace, item.image, *corpus_index(), glyph_ocr()), Error);
}

TEST(Engine, InteractiveWaitsForJudgements) {
  const auto& item = corpus_item("plain-05-0");
  ProtocolEngine engine(item.id, item.image, *corpus_index(), glyph_ocr(), {}, Mode::Interactive);
  ASSERT_EQ(engine.advance(), SessionStatus::AwaitingJudgement);
  EXPECT_EQ(engine.current_step(), 1);
  ASSERT_FALSE(engine.pending().empty());
  EXPECT_EQ(code_of([&] { engine.submit("no-such-hit", HumanDecision::Unrelated); }), ErrorCode::Conflict);

  // The human asserts a relation the automated judge would not make.
  const std::string first = engine.pending().front().hit.hit_id;
  engine.submit(first, HumanDecision::RelatedButDistinct);
  ASSERT_EQ(engine.status(), SessionStatus::Completed);
  ASSERT_TRUE(engine.trace().verdict);
  EXPECT_TRUE(is_meme(engine.trace().verdict->outcome));
  EXPECT_EQ(engine.trace().verdict->decided_by, DecidedBy::Human);
  EXPECT_TRUE(validate_trace(engine.trace()).empty());
  EXPECT_EQ(code_of([&] { engine.submit(first, HumanDecision::Unrelated); }), ErrorCode::InvalidState);
}

TEST(Engine, InteractiveAllUnrelatedReachesNonMeme) {
  const auto& item = corpus_item("plain-06-0");
  ProtocolEngine engine(item.id, item.image, *corpus_index(), glyph_ocr(), {}, Mode::Interactive);
  engine.advance();
  while (engine.status() == SessionStatus::AwaitingJudgement) {
    for (const auto& p : engine.pending()) {
      if (!p.decision) {
        engine.submit(p.hit.hit_id, HumanDecision::Unrelated);
        break;
      }
    }
  }
  ASSERT_TRUE(engine.trace().verdict);
  EXPECT_EQ(engine.trace().verdict->outcome, Outcome::NonMemeticImageText);
  EXPECT_FALSE(engine.trace().verdict->viral_flag);
  EXPECT_TRUE(validate_trace(engine.trace()).empty());
}

TEST(Engine, ReplayReproducesVerdict) {
  for (const char* id : {"fm-12-0", "mi-03-1", "ts-04-0", "plain-02-0"}) {
    const auto first = run(id);
    const auto again = replay(first.trace, corpus_item(id).image, *corpus_index(), glyph_ocr());
    ASSERT_TRUE(first.verdict && again.verdict) << id;
    EXPECT_EQ(first.verdict->outcome, again.verdict->outcome) << id;
    EXPECT_EQ(path(first.trace), path(again.trace)) << id;
  }
}

TEST(Engine, ConfigChangesOutcome) {
  EngineConfig strict;
  strict.thresholds.tau_share = 1.01;  // no background can ever match
  const auto& item = corpus_item("cm-06-0");
  const auto r = run_protocol(item.id, item.image, *corpus_index(), glyph_ocr(), strict);
  ASSERT_TRUE(r.verdict);
  EXPECT_NE(r.verdict->outcome, Outcome::CharacterMacro);
  EXPECT_EQ(r.verdict->config, strict);
}

TEST(Trace, JsonRoundTrip) {
  const auto r = run("fm-11-1");
  const auto json = trace_to_json(r.trace, 2);
  const auto back = trace_from_json(json);
  EXPECT_EQ(trace_to_json(back, 2), json);
  EXPECT_TRUE(validate_trace(back).empty());
  ASSERT_TRUE(back.verdict);
  EXPECT_EQ(back.verdict->outcome, r.verdict->outcome);
}

TEST(Trace, JsonRejectsOtherSchema) {
  auto json = trace_to_json(run("nmm-01-0").trace);
  const auto pos = json.find("\"schema_version\":1");
  ASSERT_NE(pos, std::string::npos);
  json.replace(pos, 18, "\"schema_version\":9");
  EXPECT_EQ(code_of([&] { trace_from_json(json); }), ErrorCode::FormatVersion);
  EXPECT_EQ(code_of([] { trace_from_json("{\"steps\": 3}"); }), ErrorCode::InvalidInput);
}

TEST(Trace, ValidatorCatchesTampering) {
  auto t = run("cm-07-0").trace;
  ASSERT_TRUE(validate_trace(t).empty());
  auto skipped = t;
  skipped.steps.front().decision.next_step = 2;
  EXPECT_FALSE(validate_trace(skipped).empty());
  auto wrong = t;
  wrong.steps.back().decision.outcome = Outcome::MemeticTrend;
  EXPECT_FALSE(validate_trace(wrong).empty());
  auto flagged = t;
  flagged.verdict->viral_flag = true;
  EXPECT_FALSE(validate_trace(flagged).empty());
  auto truncated = t;
  truncated.steps.pop_back();
  EXPECT_FALSE(validate_trace(truncated).empty());
}

TEST(Trend, NeedsMutuallyDistinctHits) {
  const Fingerprint cand = fingerprint(synth::photo(70));
  auto hit = [](const std::string& id, std::uint64_t seed, const std::string& text) {
    SearchHit h;
    h.hit_id = id;
    h.text = text;
    h.fingerprint = std::make_shared<const Fingerprint>(fingerprint(synth::photo(seed)));
    return h;
  };
  const std::string caption = "same words everywhere";
  EXPECT_TRUE(detect_memetic_trend(cand, caption, {hit("a", 71, caption), hit("b", 72, caption)}));
  EXPECT_FALSE(detect_memetic_trend(cand, caption, {hit("a", 71, caption), hit("b", 71, caption)}));
  EXPECT_FALSE(detect_memetic_trend(cand, caption, {hit("a", 71, caption), hit("b", 72, "other text")}));
  EXPECT_FALSE(detect_memetic_trend(cand, caption, {hit("a", 71, caption)}));
  EXPECT_TRUE(detect_memetic_trend(cand, caption, {hit("a", 71, caption)}, 0.8, 0.5, 1));
}
