#include "memetect/service.hpp"

#include <mutex>
#include <random>
#include <regex>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"
#include "memetect/audit.hpp"
#include "memetect/errors.hpp"
#include "memetect/store.hpp"

namespace memetect {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput:
    case ErrorCode::ContractViolation: return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict:
    case ErrorCode::InvalidState: return 409;
    case ErrorCode::PayloadTooLarge: return 413;
    case ErrorCode::DecodeFailed:
    case ErrorCode::InsufficientFeatures:
    case ErrorCode::NothingLeft: return 422;
    case ErrorCode::BackendMissing: return 501;
    case ErrorCode::ProviderUnavailable: return 503;
    default: return 500;
  }
}

ApiResponse problem(int status, std::string_view code, std::string_view title, std::string_view detail) {
  json j = {{"schema_version", kSchemaVersion},
            {"type", "urn:memetect:error:" + std::string(code)},
            {"title", title},
            {"status", status},
            {"code", code},
            {"detail", detail}};
  return {status, j.dump(), true};
}

ApiResponse problem(const Error& e) {
  return problem(http_status(e.code()), to_string(e.code()), to_string(e.code()), e.what());
}

ApiResponse ok(json j, int status = 200) {
  j["schema_version"] = kSchemaVersion;
  return {status, j.dump(), false};
}

json parse_body(std::string_view body) {
  try {
    json j = json::parse(body.empty() ? std::string_view("{}") : body);
    if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, std::string("request body is not JSON: ") + e.what());
  }
}

std::string field(const json& j, const char* name, std::string fallback = {}) {
  if (!j.contains(name) || j[name].is_null()) return fallback;
  if (!j[name].is_string()) throw Error(ErrorCode::InvalidInput, std::string(name) + " must be a string");
  return j[name].get<std::string>();
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mu);
  return fmt::format("s-{:016x}", gen());
}

json judgement_summary(const RelatednessJudgement& j) {
  return {{"related_but_distinct", j.related_but_distinct},
          {"identical", j.identical},
          {"text_novelty", j.novelty.text_novelty},
          {"visual_novelty", j.novelty.visual_novelty},
          {"matches", j.matches.size()}};
}

}  // namespace

struct Service::Impl {
  struct Slot {
    std::mutex mu;
    std::string id;
    std::string candidate_id;
    std::string dataset;
    std::string provider;
    std::string created_at;
    Mode mode = Mode::Automated;
    std::unique_ptr<ProtocolEngine> engine;  // absent once finished and reloaded
    ProtocolTrace trace;                     // authoritative when engine is absent
    std::vector<std::pair<std::string, HumanDecision>> judgements;
  };

  ServiceOptions opt;
  Store store;
  std::mutex slots_mu;
  std::unordered_map<std::string, std::shared_ptr<Slot>> slots;
  httplib::Server* server = nullptr;
  std::unique_ptr<httplib::Server> owned;

  explicit Impl(ServiceOptions o) : opt(std::move(o)), store(opt.store_dir) {
    if (!opt.ocr) opt.ocr = make_text_extractor("glyph");
    if (opt.providers.empty()) throw Error(ErrorCode::InvalidInput, "service needs at least one search provider");
    if (opt.default_provider.empty()) opt.default_provider = opt.providers.begin()->first;
    recover();
  }

  const SearchProvider& provider(const std::string& name) const {
    auto it = opt.providers.find(name);
    if (it == opt.providers.end()) throw Error(ErrorCode::InvalidInput, "unknown provider: " + name);
    return *it->second;
  }

  const ProtocolTrace& trace_of(const Slot& s) const { return s.engine ? s.engine->trace() : s.trace; }
  SessionStatus status_of(const Slot& s) const { return s.engine ? s.engine->status() : s.trace.status; }

  json session_json(const Slot& s) const {
    const auto& trace = trace_of(s);
    json pending = json::array();
    if (s.engine && s.engine->status() == SessionStatus::AwaitingJudgement) {
      for (const auto& p : s.engine->pending()) {
        pending.push_back({{"hit_id", p.hit.hit_id},
                           {"view", to_string(p.view)},
                           {"view_index", p.view_index},
                           {"origin", to_string(p.hit.origin)},
                           {"source_url", p.hit.source_url},
                           {"text", p.hit.text},
                           {"visual_distance", p.hit.visual_distance},
                           {"decided", p.decision ? json(to_string(*p.decision)) : json(nullptr)},
                           {"suggestion", judgement_summary(p.suggestion)}});
      }
    }
    const int step = s.engine ? s.engine->current_step() : (trace.steps.empty() ? 0 : trace.steps.back().step);
    return {{"session_id", s.id},
            {"candidate_id", s.candidate_id},
            {"mode", to_string(s.mode)},
            {"dataset", s.dataset},
            {"provider", s.provider},
            {"status", to_string(status_of(s))},
            {"current_step", step},
            {"pending", std::move(pending)},
            {"end_of_results", true},
            {"n", trace.config.n},
            {"verdict", trace.verdict ? json::parse(verdict_to_json(*trace.verdict)) : json(nullptr)},
            {"trace", json::parse(trace_to_json(trace))},
            {"created_at", s.created_at}};
  }

  void persist(const Slot& s) {
    const auto& trace = trace_of(s);
    json js = json::array();
    for (const auto& [hit, d] : s.judgements) js.push_back({{"hit_id", hit}, {"decision", to_string(d)}});
    const auto now = utc_now_iso();
    store.put_session({s.id, s.candidate_id, std::string(to_string(s.mode)), std::string(to_string(status_of(s))),
                       s.dataset, s.provider, trace_to_json(trace), js.dump(), s.created_at, now});
    if (trace.verdict && status_of(s) == SessionStatus::Completed) {
      json v = json::parse(verdict_to_json(*trace.verdict));
      v["session_id"] = s.id;
      store.put_verdict({s.id, s.candidate_id, v.dump(), now});
    }
  }

  void recover() {
    for (const auto& row : store.sessions()) {
      auto slot = std::make_shared<Slot>();
      slot->id = row.id;
      slot->candidate_id = row.candidate_id;
      slot->dataset = row.dataset;
      slot->provider = row.provider;
      slot->created_at = row.created_at;
      slot->mode = mode_from_string(row.mode);
      slot->trace = trace_from_json(row.trace_json);
      for (const auto& j : json::parse(row.judgements_json)) {
        slot->judgements.emplace_back(j.at("hit_id").get<std::string>(),
                                      human_decision_from_string(j.at("decision").get<std::string>()));
      }
      const auto status = session_status_from_string(row.status);
      if (status == SessionStatus::Running || status == SessionStatus::AwaitingJudgement) {
        try {
          rebuild(*slot);
          persist(*slot);
        } catch (const std::exception& e) {
          spdlog::warn("session {} could not be rebuilt: {}", row.id, e.what());
        }
      }
      slots.emplace(row.id, std::move(slot));
    }
  }

  // Re-runs the engine and feeds it the recorded judgements; the engine is
  // deterministic, so the session lands where it was.
  void rebuild(Slot& s) {
    s.engine = std::make_unique<ProtocolEngine>(s.candidate_id, store.load_candidate(s.candidate_id),
                                                provider(s.provider), *opt.ocr, s.trace.config, s.mode);
    s.engine->advance();
    for (const auto& [hit, d] : s.judgements) s.engine->submit(hit, d);
  }

  std::shared_ptr<Slot> find(const std::string& id) {
    std::lock_guard lock(slots_mu);
    auto it = slots.find(id);
    if (it == slots.end()) throw Error(ErrorCode::NotFound, "unknown session: " + id);
    return it->second;
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Service::~Service() = default;

ApiResponse Service::create_candidate(std::span<const std::uint8_t> bytes) try {
  if (bytes.size() > impl_->opt.max_upload) {
    throw Error(ErrorCode::PayloadTooLarge,
                fmt::format("upload of {} bytes exceeds the {} byte limit", bytes.size(), impl_->opt.max_upload));
  }
  const RasterImage img = decode_image(bytes);
  const std::string id = img.content_digest().hex();
  const bool created = impl_->store.put_candidate(id, bytes, img.width(), img.height());
  return ok({{"candidate_id", id}, {"width", img.width()}, {"height", img.height()}, {"created", created}},
            created ? 201 : 200);
} catch (const Error& e) {
  return problem(e);
}

ApiResponse Service::start_session(std::string_view body) try {
  const json j = parse_body(body);
  const std::string cid = field(j, "candidate_id");
  if (cid.empty()) throw Error(ErrorCode::InvalidInput, "candidate_id is required");
  if (!impl_->store.has_candidate(cid)) throw Error(ErrorCode::NotFound, "unknown candidate: " + cid);

  auto slot = std::make_shared<Impl::Slot>();
  slot->id = new_session_id();
  slot->candidate_id = cid;
  slot->mode = mode_from_string(field(j, "mode", "Automated"));
  slot->provider = field(j, "provider", impl_->opt.default_provider);
  slot->dataset = field(j, "dataset");
  slot->created_at = utc_now_iso();
  const auto& prov = impl_->provider(slot->provider);

  std::lock_guard session_lock(slot->mu);
  slot->engine = std::make_unique<ProtocolEngine>(cid, impl_->store.load_candidate(cid), prov, *impl_->opt.ocr,
                                                  impl_->opt.engine, slot->mode);
  {
    std::lock_guard lock(impl_->slots_mu);
    impl_->slots.emplace(slot->id, slot);
  }
  impl_->persist(*slot);
  slot->engine->advance();
  impl_->persist(*slot);
  return ok(impl_->session_json(*slot), 201);
} catch (const Error& e) {
  return problem(e);
}

ApiResponse Service::get_session(const std::string& id) try {
  auto slot = impl_->find(id);
  std::lock_guard lock(slot->mu);
  return ok(impl_->session_json(*slot));
} catch (const Error& e) {
  return problem(e);
}

ApiResponse Service::submit_judgement(const std::string& id, std::string_view body) try {
  auto slot = impl_->find(id);
  std::unique_lock lock(slot->mu, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::Conflict, "session " + id + " is busy with another request");
  const json j = parse_body(body);
  const std::string hit = field(j, "hit_id");
  if (hit.empty()) throw Error(ErrorCode::InvalidInput, "hit_id is required");
  const HumanDecision d = human_decision_from_string(field(j, "decision"));
  if (!slot->engine || slot->engine->status() != SessionStatus::AwaitingJudgement) {
    throw Error(ErrorCode::InvalidState, "session " + id + " is not awaiting judgement");
  }
  slot->engine->submit(hit, d);
  slot->judgements.emplace_back(hit, d);
  impl_->persist(*slot);
  return ok(impl_->session_json(*slot));
} catch (const Error& e) {
  return problem(e);
}

ApiResponse Service::verdicts(const std::string& cid) try {
  if (!impl_->store.has_candidate(cid)) throw Error(ErrorCode::NotFound, "unknown candidate: " + cid);
  json list = json::array();
  for (const auto& v : impl_->store.verdicts_for(cid)) list.push_back(json::parse(v.verdict_json));
  return ok({{"candidate_id", cid}, {"verdicts", std::move(list)}});
} catch (const Error& e) {
  return problem(e);
}

ApiResponse Service::report(const std::string& dataset) try {
  std::vector<Verdict> verdicts;
  for (const auto& row : impl_->store.sessions()) {
    if (row.dataset != dataset || row.status != to_string(SessionStatus::Completed)) continue;
    const auto trace = trace_from_json(row.trace_json);
    if (trace.verdict) verdicts.push_back(*trace.verdict);
  }
  audit::AuditReport report;
  if (!verdicts.empty()) report.rows.push_back(audit::aggregate(dataset, std::span<const Verdict>(verdicts), verdicts.size()));
  json j = json::parse(audit::report_to_json(report));
  j["dataset"] = dataset;
  return ok(std::move(j));
} catch (const Error& e) {
  return problem(e);
}

ApiResponse Service::health() {
  return ok({{"status", "ok"}, {"providers", [&] {
               json p = json::array();
               for (const auto& [name, _] : impl_->opt.providers) p.push_back(name);
               return p;
             }()}});
}

std::optional<ApiResponse> Service::authorize(std::string_view header) const {
  if (impl_->opt.api_token.empty()) return std::nullopt;
  if (header == "Bearer " + impl_->opt.api_token) return std::nullopt;
  return problem(401, "unauthorized", "unauthorized", "missing or wrong bearer token");
}

namespace {

void send(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body, r.problem ? "application/problem+json" : "application/json");
}

}  // namespace

void Service::routes(httplib::Server& srv) {
  srv.set_payload_max_length(impl_->opt.max_upload + 1024 * 1024);
  srv.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (req.path == "/healthz") return httplib::Server::HandlerResponse::Unhandled;
    if (auto denied = authorize(req.get_header_value("Authorization"))) {
      send(res, *denied);
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send(res, problem(e));
    } catch (const std::exception& e) {
      send(res, problem(500, "internal", "internal", e.what()));
    }
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const char* code = res.status == 404 ? "not_found" : res.status == 413 ? "payload_too_large" : "http_error";
    send(res, problem(res.status, code, httplib::status_message(res.status), "request rejected"));
  });

  srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  srv.Post("/candidates", [this](const httplib::Request& req, httplib::Response& res) {
    std::string part;
    std::string_view body = req.body;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("file")) return send(res, problem(400, "invalid_input", "invalid_input", "multipart upload needs a 'file' part"));
      part = req.get_file_value("file").content;
      body = part;
    }
    const auto* p = reinterpret_cast<const std::uint8_t*>(body.data());
    send(res, create_candidate({p, body.size()}));
  });
  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) { send(res, start_session(req.body)); });
  srv.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, get_session(req.matches[1]));
  });
  srv.Post(R"(/sessions/([^/]+)/judgements)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, submit_judgement(req.matches[1], req.body));
  });
  srv.Get(R"(/verdicts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, verdicts(req.matches[1]));
  });
  srv.Get(R"(/reports/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, report(req.matches[1]));
  });
}

void Service::listen(const std::string& addr) {
  static const std::regex re(R"(^(.*):(\d+)$)");
  std::smatch m;
  if (!std::regex_match(addr, m, re)) throw Error(ErrorCode::InvalidInput, "address must be host:port, got '" + addr + "'");
  const int port = std::stoi(m[2]);
  if (port <= 0 || port > 65535) throw Error(ErrorCode::InvalidInput, "port out of range: " + m[2].str());
  impl_->owned = std::make_unique<httplib::Server>();
  impl_->server = impl_->owned.get();
  routes(*impl_->server);
  if (!impl_->server->bind_to_port(m[1].str(), port)) throw Error(ErrorCode::InvalidInput, "cannot bind " + addr);
  spdlog::info("listening on {}", addr);
  impl_->server->listen_after_bind();
}

void Service::stop() {
  if (impl_->server) impl_->server->stop();
}

}  // namespace memetect
