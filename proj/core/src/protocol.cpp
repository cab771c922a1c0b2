#include "memetect/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <functional>
#include <set>

#include "memetect/errors.hpp"
#include "memetect/fingerprint.hpp"
#include "memetect/text.hpp"

namespace memetect {

std::string_view code(Outcome o) {
  switch (o) {
    case Outcome::CharacterMacro: return "CM";
    case Outcome::FormatMacro: return "FM";
    case Outcome::MemeticImage: return "MI";
    case Outcome::TransferredSymbols: return "TS";
    case Outcome::MemeticTrend: return "MT";
    case Outcome::NonMemeticImageText: return "nMIT";
    case Outcome::NonMultimodal: return "nMM";
  }
  return "nMIT";
}

std::string_view long_name(Outcome o) {
  switch (o) {
    case Outcome::CharacterMacro: return "CharacterMacro";
    case Outcome::FormatMacro: return "FormatMacro";
    case Outcome::MemeticImage: return "MemeticImage";
    case Outcome::TransferredSymbols: return "TransferredSymbols";
    case Outcome::MemeticTrend: return "MemeticTrend";
    case Outcome::NonMemeticImageText: return "NonMemeticImageText";
    case Outcome::NonMultimodal: return "NonMultimodal";
  }
  return "NonMemeticImageText";
}

Outcome outcome_from_string(std::string_view s) {
  for (auto o : kAllOutcomes)
    if (code(o) == s || long_name(o) == s) return o;
  throw Error(ErrorCode::InvalidInput, "unknown outcome: " + std::string(s));
}

bool is_meme(Outcome o) { return o != Outcome::NonMemeticImageText && o != Outcome::NonMultimodal; }

std::string_view to_string(Mode m) { return m == Mode::Interactive ? "Interactive" : "Automated"; }

Mode mode_from_string(std::string_view s) {
  if (s == "Automated") return Mode::Automated;
  if (s == "Interactive") return Mode::Interactive;
  throw Error(ErrorCode::InvalidInput, "unknown mode: " + std::string(s));
}

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Running: return "Running";
    case SessionStatus::AwaitingJudgement: return "AwaitingJudgement";
    case SessionStatus::Completed: return "Completed";
    case SessionStatus::Aborted: return "Aborted";
  }
  return "Running";
}

SessionStatus session_status_from_string(std::string_view s) {
  for (auto st : {SessionStatus::Running, SessionStatus::AwaitingJudgement, SessionStatus::Completed, SessionStatus::Aborted})
    if (to_string(st) == s) return st;
  throw Error(ErrorCode::InvalidInput, "unknown session status: " + std::string(s));
}

std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

bool legal_advance(int from, int to) {
  switch (from) {
    case 0: return to == 1;
    case 1: return to == 2;
    case 2: return to == 3 || to == 4 || to == 5 || to == 6;
    case 3:
    case 4:
    case 5: return to == 6;
    case 6: return to == 7;
    case 7: return to == 8;
    default: return false;
  }
}

bool legal_verdict(int step, Outcome o) {
  switch (step) {
    case 0: return o == Outcome::NonMultimodal;
    case 1: return o == Outcome::CharacterMacro || o == Outcome::FormatMacro || o == Outcome::MemeticImage;
    case 3: return o == Outcome::CharacterMacro;
    case 4:
    case 6: return o == Outcome::TransferredSymbols;
    case 5: return o == Outcome::MemeticImage;
    case 7: return o == Outcome::MemeticTrend;
    case 8: return o == Outcome::NonMemeticImageText;
    default: return false;
  }
}

std::vector<std::string> validate_trace(const ProtocolTrace& trace) {
  std::vector<std::string> problems;
  auto fail = [&](std::string msg) { problems.push_back(std::move(msg)); };
  if (trace.schema_version != ProtocolTrace::kSchemaVersion) fail("unsupported schema_version");
  if (trace.steps.empty()) {
    if (trace.status == SessionStatus::Completed) fail("completed trace has no steps");
    return problems;
  }
  if (trace.steps.front().step != 0) fail("trace does not start at step 0");
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& rec = trace.steps[i];
    const bool last = i + 1 == trace.steps.size();
    const std::string where = "step record " + std::to_string(i) + " (step " + std::to_string(rec.step) + ")";
    switch (rec.decision.kind) {
      case Decision::Kind::Advance:
        if (!legal_advance(rec.step, rec.decision.next_step)) {
          fail(where + ": illegal transition to step " + std::to_string(rec.decision.next_step));
        }
        if (!last && trace.steps[i + 1].step != rec.decision.next_step) fail(where + ": next record is not the target");
        if (last && trace.status == SessionStatus::Completed) fail(where + ": completed trace ends without a verdict");
        break;
      case Decision::Kind::Verdict:
        if (!legal_verdict(rec.step, rec.decision.outcome)) {
          fail(where + ": verdict " + std::string(code(rec.decision.outcome)) + " not reachable here");
        }
        if (!last) fail(where + ": records after the verdict");
        if (!trace.verdict || trace.verdict->outcome != rec.decision.outcome) fail(where + ": verdict mismatch");
        break;
      case Decision::Kind::Abort:
        if (!last) fail(where + ": records after an abort");
        if (trace.status != SessionStatus::Aborted) fail(where + ": abort without Aborted status");
        break;
    }
  }
  if (trace.verdict) {
    if (trace.verdict->viral_flag && trace.verdict->outcome != Outcome::NonMemeticImageText) {
      fail("viral flag on a non-nMIT verdict");
    }
    if (trace.status != SessionStatus::Completed) fail("verdict on an unfinished trace");
  } else if (trace.status == SessionStatus::Completed) {
    fail("completed trace without verdict");
  }
  return problems;
}

namespace {


double hit_distance(const Fingerprint& a, const SearchHit& h, std::vector<std::shared_ptr<const Fingerprint>>& cache,
                    std::size_t i) {
  if (!cache[i]) {
    if (h.fingerprint) {
      cache[i] = h.fingerprint;
    } else if (auto img = h.image()) {
      cache[i] = std::make_shared<const Fingerprint>(fingerprint(*img, h.text_boxes));
    }
  }
  return cache[i] ? visual_distance(a, *cache[i]) : h.visual_distance;
}

}  // namespace

bool detect_memetic_trend(const Fingerprint& candidate, std::string_view c_text, const std::vector<SearchHit>& hits,
                          double containment, double min_distance, std::size_t min_hits) {
  if (text::content_terms(c_text).empty() || min_hits == 0) return false;
  std::vector<std::shared_ptr<const Fingerprint>> fps(hits.size());
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (text::containment(c_text, hits[i].text) < containment) continue;
    if (hit_distance(candidate, hits[i], fps, i) < min_distance) continue;
    eligible.push_back(i);
  }
  if (eligible.size() < min_hits) return false;

  auto far_apart = [&](std::size_t a, std::size_t b) {
    if (!fps[a] || !fps[b]) return true;  // no pixels to compare: provider said they differ from the candidate
    return visual_distance(*fps[a], *fps[b]) >= min_distance;
  };
  // Smallest qualifying set is tiny in practice; depth-first search over the eligible hits.
  std::vector<std::size_t> chosen;
  std::function<bool(std::size_t)> extend = [&](std::size_t from) {
    if (chosen.size() == min_hits) return true;
    for (std::size_t k = from; k < eligible.size(); ++k) {
      const auto cand = eligible[k];
      if (!std::all_of(chosen.begin(), chosen.end(), [&](std::size_t c) { return far_apart(c, cand); })) continue;
      chosen.push_back(cand);
      if (extend(k + 1)) return true;
      chosen.pop_back();
    }
    return false;
  };
  return extend(0);
}

struct ProtocolEngine::Impl {
  std::string id;
  RasterImage image;
  const SearchProvider* provider;
  const TextExtractor* ocr;
  EngineConfig config;
  Mode mode;

  ProtocolTrace trace;
  SessionStatus status = SessionStatus::Running;
  int step = 0;

  bool prepared = false;
  std::vector<TextRegion> regions;
  CandidateContext context;
  std::optional<PanelLayout> panel;
  std::optional<Fingerprint> candidate_fp;

  // Interactive step in progress.
  std::optional<StepRecord> open;
  std::vector<DerivedView> open_views;
  std::vector<PendingHit> pending;
  std::vector<SearchHit> related_hits;  // human-confirmed at the open step

  Impl(std::string cid, RasterImage img, const SearchProvider& p, const TextExtractor& o, EngineConfig cfg, Mode m)
      : id(std::move(cid)), image(std::move(img)), provider(&p), ocr(&o), config(cfg), mode(m) {
    trace.candidate_id = id;
    trace.candidate_digest = image.content_digest().hex();
    trace.provider = provider->name();
    trace.ocr_backend = ocr->name();
    trace.mode = mode;
    trace.config = config;
    trace.status = SessionStatus::Running;
    trace.started_at = utc_now_iso();
  }

  void prepare() {
    if (prepared) return;
    regions = decompose::detect_text_regions(image, *ocr);
    context = make_context(image, regions);
    context.image = &image;
    prepared = true;
  }

  const PanelLayout& layout() {
    prepare();
    if (!panel) panel = decompose::classify_layout(image, regions);
    return *panel;
  }

  std::vector<Rect> boxes_within(const Rect& area) const {
    std::vector<Rect> out;
    for (const auto& r : regions) {
      const Rect inter = r.bbox.intersect(area);
      if (!inter.empty()) out.push_back(inter.translated(-area.x, -area.y));
    }
    return out;
  }

  const Fingerprint& candidate_fingerprint() {
    prepare();
    if (!candidate_fp) candidate_fp = fingerprint(image, context.text_boxes);
    return *candidate_fp;
  }

  StepRecord begin(int s) {
    StepRecord r;
    r.step = s;
    r.started_at = utc_now_iso();
    return r;
  }

  void finish(StepRecord r, Decision d) {
    r.decision = d;
    r.finished_at = utc_now_iso();
    trace.steps.push_back(std::move(r));
    switch (d.kind) {
      case Decision::Kind::Advance:
        step = d.next_step;
        status = SessionStatus::Running;
        break;
      case Decision::Kind::Verdict: {
        Verdict v;
        v.candidate_id = id;
        v.outcome = d.outcome;
        v.decided_by = mode == Mode::Interactive ? DecidedBy::Human : DecidedBy::Automated;
        v.config = config;
        if (d.outcome == Outcome::NonMemeticImageText) v.viral_flag = viral_check(step1_judgements());
        trace.verdict = v;
        status = SessionStatus::Completed;
        trace.finished_at = utc_now_iso();
        break;
      }
      case Decision::Kind::Abort:
        status = SessionStatus::Aborted;
        trace.finished_at = utc_now_iso();
        break;
    }
    trace.status = status;
  }

  std::vector<RelatednessJudgement> step1_judgements() const {
    std::vector<RelatednessJudgement> out;
    for (const auto& r : trace.steps)
      if (r.step == 1)
        for (const auto& q : r.queries) out.insert(out.end(), q.judgements.begin(), q.judgements.end());
    return out;
  }

  static Decision advance_to(int s) { return {Decision::Kind::Advance, s, {}, {}}; }
  static Decision verdict(Outcome o) { return {Decision::Kind::Verdict, 0, o, {}}; }

  // Which outcome fires when a step finds a relative, and where to go if none does.
  Outcome fired_outcome(int s, StepRecord& rec) {
    switch (s) {
      case 1: {
        const auto kind = layout().kind;
        rec.note = "layout=" + std::string(to_string(kind));
        if (kind == LayoutKind::SingleCharacterCaption) {
          rec.rules.push_back("template_subtype: SingleCharacterCaption -> CM");
          return Outcome::CharacterMacro;
        }
        if (kind == LayoutKind::ImagePlusWhitespace) {
          rec.rules.push_back("whitespace_template_is_memetic_image: ImagePlusWhitespace -> MI");
          return Outcome::MemeticImage;
        }
        rec.rules.push_back("template_subtype: " + std::string(to_string(kind)) + " -> FM");
        return Outcome::FormatMacro;
      }
      case 3: return Outcome::CharacterMacro;
      case 5: return Outcome::MemeticImage;
      case 7: return Outcome::MemeticTrend;
      default: return Outcome::TransferredSymbols;
    }
  }

  static int fallback_step(int s) { return s == 1 ? 2 : s == 6 ? 7 : s == 7 ? 8 : 6; }

  std::vector<DerivedView> views_for(int s, StepRecord& rec) {
    switch (s) {
      case 1: return {decompose::full_view(image)};
      case 3:
        try {
          return {decompose::crop_remove_text(image, regions)};
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NothingLeft) throw;
          rec.rules.push_back("text_crop_empty: nothing left after removing text");
          return {};
        }
      case 4: return decompose::split_segments(image, layout());
      case 5: return {decompose::crop_remove_whitespace(image, layout())};
      case 6: return decompose::extract_superimposed_elements(image, regions);
      case 7: {
        auto v = decompose::extract_text(regions);
        if (text::content_terms(v.text).empty()) return {};
        return {std::move(v)};
      }
      default: return {};
    }
  }

  std::vector<SearchHit> query(const DerivedView& view, QueryRecord& q) {
    SearchOptions opts;
    opts.exclude_ids = {id};
    if (view.kind == ViewKind::ExtractedText) {
      q.query = view.text;
      return provider->text_search(view.text, config.n, opts);
    }
    const Rect area = view.source.empty() ? image.bounds() : view.source.front();
    opts.query_text_boxes = boxes_within(area);
    q.query = "IS(" + std::string(to_string(view.kind)) + ")";
    return provider->image_search(*view.image, config.n, opts);
  }

  bool trend_holds(const std::vector<SearchHit>& related) {
    return detect_memetic_trend(candidate_fingerprint(), context.text, related, config.thresholds.text_containment,
                                config.trend_min_distance, config.trend_min_hits);
  }

  // Runs one search step. Returns false when the engine must wait for a human.
  bool search_step(int s) {
    StepRecord rec = begin(s);
    std::vector<DerivedView> views = views_for(s, rec);
    if (views.empty()) {
      if (s == 7) rec.note = "no extractable text";
      if (s == 6) rec.note = "no superimposed elements";
      finish(std::move(rec), advance_to(fallback_step(s)));
      return true;
    }

    std::vector<std::vector<SearchHit>> results;
    for (std::size_t v = 0; v < views.size(); ++v) {
      QueryRecord q;
      q.view = views[v].kind;
      q.view_index = views[v].index;
      q.source = views[v].source;
      try {
        results.push_back(query(views[v], q));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ProviderUnavailable) throw;
        rec.queries.push_back(std::move(q));
        finish(std::move(rec), {Decision::Kind::Abort, 0, {}, std::string("provider unavailable: ") + e.what()});
        return true;
      }
      q.hits_reviewed = results.back().size();
      rec.queries.push_back(std::move(q));
    }

    if (mode == Mode::Interactive) {
      std::set<std::string> seen;
      pending.clear();
      for (std::size_t v = 0; v < views.size(); ++v)
        for (const auto& h : results[v]) {
          if (!seen.insert(h.hit_id).second) continue;
          pending.push_back({h, views[v].kind, views[v].index, judge(views[v], context, h, config.thresholds), {}});
        }
      if (pending.empty()) {
        finish(std::move(rec), advance_to(fallback_step(s)));
        return true;
      }
      open = std::move(rec);
      open_views = std::move(views);
      related_hits.clear();
      status = SessionStatus::AwaitingJudgement;
      trace.status = status;
      return false;
    }

    std::vector<SearchHit> related;
    for (std::size_t v = 0; v < views.size(); ++v)
      for (const auto& h : results[v]) {
        auto j = judge(views[v], context, h, config.thresholds);
        if (j.related_but_distinct) related.push_back(h);
        rec.queries[v].judgements.push_back(std::move(j));
      }
    const bool fired = s == 7 ? trend_holds(related) : !related.empty();
    if (fired) {
      const Outcome o = fired_outcome(s, rec);
      finish(std::move(rec), verdict(o));
    } else {
      finish(std::move(rec), advance_to(fallback_step(s)));
    }
    return true;
  }

  void modality_step() {
    StepRecord rec = begin(0);
    prepare();
    const auto confident = std::count_if(regions.begin(), regions.end(), [&](const TextRegion& r) {
      return r.confidence >= config.modality_min_confidence;
    });
    const double coverage = decompose::text_coverage(image, regions);
    char note[96];
    std::snprintf(note, sizeof note, "text_regions=%zu confident=%ld coverage=%.3f", regions.size(),
                  static_cast<long>(confident), coverage);
    rec.note = note;
    if (confident == 0 || coverage >= config.modality_max_coverage) {
      finish(std::move(rec), verdict(Outcome::NonMultimodal));
    } else {
      finish(std::move(rec), advance_to(1));
    }
  }

  void route_step() {
    StepRecord rec = begin(2);
    const auto kind = layout().kind;
    rec.note = "layout=" + std::string(to_string(kind));
    int next = 6;
    if (kind == LayoutKind::SingleCharacterCaption) next = 3;
    if (kind == LayoutKind::MultiSegment) next = 4;
    if (kind == LayoutKind::ImagePlusWhitespace) next = 5;
    finish(std::move(rec), advance_to(next));
  }

  void final_step() {
    StepRecord rec = begin(8);
    finish(std::move(rec), verdict(Outcome::NonMemeticImageText));
  }

  SessionStatus run() {
    while (status == SessionStatus::Running) {
      switch (step) {
        case 0: modality_step(); break;
        case 2: route_step(); break;
        case 8: final_step(); break;
        default:
          prepare();
          if (!search_step(step)) return status;
      }
    }
    return status;
  }

  SessionStatus submit(std::string_view hit_id, HumanDecision d) {
    if (status != SessionStatus::AwaitingJudgement || !open) {
      throw Error(ErrorCode::InvalidState, "session is not awaiting judgement");
    }
    auto it = std::find_if(pending.begin(), pending.end(), [&](const PendingHit& p) { return p.hit.hit_id == hit_id; });
    if (it == pending.end()) throw Error(ErrorCode::Conflict, "hit is not pending: " + std::string(hit_id));
    if (it->decision) throw Error(ErrorCode::Conflict, "hit already judged: " + std::string(hit_id));
    it->decision = d;

    RelatednessJudgement j = it->suggestion;
    j.decided_by = DecidedBy::Human;
    j.related_but_distinct = d == HumanDecision::RelatedButDistinct;
    j.identical = d == HumanDecision::Identical;
    for (auto& q : open->queries)
      if (q.view == it->view && q.view_index == it->view_index) q.judgements.push_back(j);
    if (j.related_but_distinct) related_hits.push_back(it->hit);

    const int s = open->step;
    const bool fired = s == 7 ? trend_holds(related_hits) : j.related_but_distinct;
    const bool exhausted = std::all_of(pending.begin(), pending.end(), [](const PendingHit& p) { return p.decision; });
    if (fired || exhausted) {
      StepRecord rec = std::move(*open);
      open.reset();
      pending.clear();
      open_views.clear();
      related_hits.clear();
      if (fired) {
        const Outcome o = fired_outcome(s, rec);
        finish(std::move(rec), verdict(o));
      } else {
        finish(std::move(rec), advance_to(fallback_step(s)));
      }
      return run();
    }
    return status;
  }
};

ProtocolEngine::ProtocolEngine(std::string candidate_id, RasterImage image, const SearchProvider& provider,
                               const TextExtractor& ocr, EngineConfig config, Mode mode)
    : impl_(std::make_unique<Impl>(std::move(candidate_id), std::move(image), provider, ocr, config, mode)) {}
ProtocolEngine::~ProtocolEngine() = default;
ProtocolEngine::ProtocolEngine(ProtocolEngine&&) noexcept = default;
ProtocolEngine& ProtocolEngine::operator=(ProtocolEngine&&) noexcept = default;

ProtocolEngine ProtocolEngine::resume(const ProtocolTrace& aborted, RasterImage image, const SearchProvider& provider,
                                      const TextExtractor& ocr) {
  if (aborted.status != SessionStatus::Aborted || aborted.steps.empty() ||
      aborted.steps.back().decision.kind != Decision::Kind::Abort) {
    throw Error(ErrorCode::InvalidState, "only aborted traces can be resumed");
  }
  if (image.content_digest().hex() != aborted.candidate_digest) {
    throw Error(ErrorCode::InvalidInput, "image does not match the trace's candidate digest");
  }
  ProtocolEngine engine(aborted.candidate_id, std::move(image), provider, ocr, aborted.config, aborted.mode);
  auto& impl = *engine.impl_;
  impl.trace.steps.assign(aborted.steps.begin(), aborted.steps.end() - 1);
  impl.trace.started_at = aborted.started_at;
  impl.step = aborted.steps.back().step;
  impl.trace.steps.reserve(impl.trace.steps.size() + 8);
  return engine;
}

SessionStatus ProtocolEngine::advance() {
  if (impl_->status == SessionStatus::Running) return impl_->run();
  return impl_->status;
}

SessionStatus ProtocolEngine::submit(std::string_view hit_id, HumanDecision decision) {
  return impl_->submit(hit_id, decision);
}

SessionStatus ProtocolEngine::status() const { return impl_->status; }
int ProtocolEngine::current_step() const { return impl_->open ? impl_->open->step : impl_->step; }
const std::vector<PendingHit>& ProtocolEngine::pending() const { return impl_->pending; }
const ProtocolTrace& ProtocolEngine::trace() const { return impl_->trace; }

const std::vector<TextRegion>& ProtocolEngine::text_regions() const {
  impl_->prepare();
  return impl_->regions;
}

std::optional<PanelLayout> ProtocolEngine::layout() const { return impl_->panel; }

RunResult run_protocol(std::string candidate_id, const RasterImage& image, const SearchProvider& provider,
                       const TextExtractor& ocr, const EngineConfig& config) {
  ProtocolEngine engine(std::move(candidate_id), image, provider, ocr, config, Mode::Automated);
  engine.advance();
  return {engine.trace().verdict, engine.trace()};
}

RunResult replay(const ProtocolTrace& trace, const RasterImage& image, const SearchProvider& provider,
                 const TextExtractor& ocr) {
  if (image.content_digest().hex() != trace.candidate_digest) {
    throw Error(ErrorCode::InvalidInput, "image does not match the trace's candidate digest");
  }
  return run_protocol(trace.candidate_id, image, provider, ocr, trace.config);
}

}  // namespace memetect
