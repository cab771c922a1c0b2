#include <string>

#include "json.hpp"
#include "memetect/errors.hpp"
#include "memetect/protocol.hpp"

namespace memetect {

using nlohmann::json;

namespace {

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }

Rect rect_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::InvalidInput, "rect must be [x, y, w, h]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json config_json(const EngineConfig& c) {
  const auto& t = c.thresholds;
  return {{"n", c.n},
          {"modality_min_confidence", c.modality_min_confidence},
          {"modality_max_coverage", c.modality_max_coverage},
          {"trend_min_distance", c.trend_min_distance},
          {"trend_min_hits", c.trend_min_hits},
          {"relate",
           {{"tau_share", t.tau_share},
            {"tau_novel", t.tau_novel},
            {"tau_novel_visual", t.tau_novel_visual},
            {"tau_feat", t.tau_feat},
            {"text_containment", t.text_containment},
            {"identity_distance", t.identity_distance},
            {"identity_text", t.identity_text},
            {"recrop_coverage", t.recrop_coverage},
            {"pixel_difference", t.pixel_difference}}}};
}

EngineConfig config_from(const json& j) {
  EngineConfig c;
  c.n = j.at("n").get<std::size_t>();
  c.modality_min_confidence = j.at("modality_min_confidence").get<double>();
  c.modality_max_coverage = j.at("modality_max_coverage").get<double>();
  c.trend_min_distance = j.at("trend_min_distance").get<double>();
  c.trend_min_hits = j.at("trend_min_hits").get<std::size_t>();
  const auto& r = j.at("relate");
  auto& t = c.thresholds;
  t.tau_share = r.at("tau_share").get<double>();
  t.tau_novel = r.at("tau_novel").get<double>();
  t.tau_novel_visual = r.at("tau_novel_visual").get<double>();
  t.tau_feat = r.at("tau_feat").get<int>();
  t.text_containment = r.at("text_containment").get<double>();
  t.identity_distance = r.at("identity_distance").get<double>();
  t.identity_text = r.at("identity_text").get<double>();
  t.recrop_coverage = r.at("recrop_coverage").get<double>();
  t.pixel_difference = r.at("pixel_difference").get<int>();
  return c;
}

json judgement_json(const RelatednessJudgement& j) {
  json matches = json::array();
  for (const auto& m : j.matches) {
    json mj = {{"kind", to_string(m.kind)}, {"similarity", m.similarity}};
    if (m.kind == ElementKind::Text) {
      mj["candidate_text"] = m.candidate_text;
      mj["hit_text"] = m.hit_text;
    } else {
      mj["candidate_region"] = rect_json(m.candidate_region);
      mj["hit_region"] = rect_json(m.hit_region);
    }
    matches.push_back(std::move(mj));
  }
  return {{"hit_id", j.hit_id},
          {"related_but_distinct", j.related_but_distinct},
          {"identical", j.identical},
          {"decided_by", to_string(j.decided_by)},
          {"novelty", {{"text", j.novelty.text_novelty}, {"visual", j.novelty.visual_novelty}}},
          {"matches", std::move(matches)}};
}

RelatednessJudgement judgement_from(const json& j) {
  RelatednessJudgement out;
  out.hit_id = j.at("hit_id").get<std::string>();
  out.related_but_distinct = j.at("related_but_distinct").get<bool>();
  out.identical = j.at("identical").get<bool>();
  out.decided_by = decided_by_from_string(j.at("decided_by").get<std::string>());
  out.novelty.text_novelty = j.at("novelty").at("text").get<double>();
  out.novelty.visual_novelty = j.at("novelty").at("visual").get<double>();
  for (const auto& mj : j.at("matches")) {
    MemeticElementMatch m;
    m.kind = element_kind_from_string(mj.at("kind").get<std::string>());
    m.similarity = mj.at("similarity").get<double>();
    if (m.kind == ElementKind::Text) {
      m.candidate_text = mj.at("candidate_text").get<std::string>();
      m.hit_text = mj.at("hit_text").get<std::string>();
    } else {
      m.candidate_region = rect_from(mj.at("candidate_region"));
      m.hit_region = rect_from(mj.at("hit_region"));
    }
    out.matches.push_back(std::move(m));
  }
  return out;
}

json decision_json(const Decision& d) {
  switch (d.kind) {
    case Decision::Kind::Advance: return {{"kind", "advance"}, {"next_step", d.next_step}};
    case Decision::Kind::Verdict: return {{"kind", "verdict"}, {"outcome", code(d.outcome)}};
    case Decision::Kind::Abort: return {{"kind", "abort"}, {"reason", d.reason}};
  }
  return {};
}

Decision decision_from(const json& j) {
  Decision d;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "advance") {
    d.kind = Decision::Kind::Advance;
    d.next_step = j.at("next_step").get<int>();
  } else if (kind == "verdict") {
    d.kind = Decision::Kind::Verdict;
    d.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  } else if (kind == "abort") {
    d.kind = Decision::Kind::Abort;
    d.reason = j.at("reason").get<std::string>();
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown decision kind: " + kind);
  }
  return d;
}

json verdict_to_json_value(const Verdict& v) {
  return {{"candidate_id", v.candidate_id},
          {"outcome", code(v.outcome)},
          {"outcome_name", long_name(v.outcome)},
          {"is_meme", is_meme(v.outcome)},
          {"viral_flag", v.viral_flag},
          {"decided_by", to_string(v.decided_by)},
          {"config", config_json(v.config)}};
}

}  // namespace

std::string verdict_to_json(const Verdict& v, int indent) { return verdict_to_json_value(v).dump(indent); }

std::string trace_to_json(const ProtocolTrace& trace, int indent) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json queries = json::array();
    for (const auto& q : s.queries) {
      json source = json::array();
      for (const auto& r : q.source) source.push_back(rect_json(r));
      json judgements = json::array();
      for (const auto& j : q.judgements) judgements.push_back(judgement_json(j));
      queries.push_back({{"view", to_string(q.view)},
                         {"view_index", q.view_index},
                         {"source", std::move(source)},
                         {"query", q.query},
                         {"hits_reviewed", q.hits_reviewed},
                         {"judgements", std::move(judgements)}});
    }
    steps.push_back({{"step", s.step},
                     {"started_at", s.started_at},
                     {"finished_at", s.finished_at},
                     {"note", s.note},
                     {"rules", s.rules},
                     {"queries", std::move(queries)},
                     {"decision", decision_json(s.decision)}});
  }
  json j = {{"schema_version", trace.schema_version},
            {"candidate_id", trace.candidate_id},
            {"candidate_digest", trace.candidate_digest},
            {"provider", trace.provider},
            {"ocr_backend", trace.ocr_backend},
            {"mode", to_string(trace.mode)},
            {"status", to_string(trace.status)},
            {"config", config_json(trace.config)},
            {"started_at", trace.started_at},
            {"finished_at", trace.finished_at},
            {"steps", std::move(steps)},
            {"verdict", trace.verdict ? verdict_to_json_value(*trace.verdict) : json(nullptr)}};
  return j.dump(indent);
}

ProtocolTrace trace_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, std::string("trace is not JSON: ") + e.what());
  }
  try {
    ProtocolTrace t;
    t.schema_version = j.at("schema_version").get<int>();
    if (t.schema_version != ProtocolTrace::kSchemaVersion) {
      throw Error(ErrorCode::FormatVersion, "unsupported trace schema_version " + std::to_string(t.schema_version));
    }
    t.candidate_id = j.at("candidate_id").get<std::string>();
    t.candidate_digest = j.at("candidate_digest").get<std::string>();
    t.provider = j.at("provider").get<std::string>();
    t.ocr_backend = j.at("ocr_backend").get<std::string>();
    t.mode = mode_from_string(j.at("mode").get<std::string>());
    t.status = session_status_from_string(j.at("status").get<std::string>());
    t.config = config_from(j.at("config"));
    t.started_at = j.value("started_at", "");
    t.finished_at = j.value("finished_at", "");
    for (const auto& sj : j.at("steps")) {
      StepRecord s;
      s.step = sj.at("step").get<int>();
      s.started_at = sj.value("started_at", "");
      s.finished_at = sj.value("finished_at", "");
      s.note = sj.value("note", "");
      s.rules = sj.value("rules", std::vector<std::string>{});
      for (const auto& qj : sj.at("queries")) {
        QueryRecord q;
        q.view = view_kind_from_string(qj.at("view").get<std::string>());
        q.view_index = qj.at("view_index").get<int>();
        for (const auto& r : qj.at("source")) q.source.push_back(rect_from(r));
        q.query = qj.at("query").get<std::string>();
        q.hits_reviewed = qj.at("hits_reviewed").get<std::size_t>();
        for (const auto& jj : qj.at("judgements")) q.judgements.push_back(judgement_from(jj));
        s.queries.push_back(std::move(q));
      }
      s.decision = decision_from(sj.at("decision"));
      t.steps.push_back(std::move(s));
    }
    const auto& vj = j.at("verdict");
    if (!vj.is_null()) {
      Verdict v;
      v.candidate_id = vj.at("candidate_id").get<std::string>();
      v.outcome = outcome_from_string(vj.at("outcome").get<std::string>());
      v.viral_flag = vj.at("viral_flag").get<bool>();
      v.decided_by = decided_by_from_string(vj.at("decided_by").get<std::string>());
      v.config = config_from(vj.at("config"));
      t.verdict = v;
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed trace: ") + e.what());
  }
}

}  // namespace memetect
