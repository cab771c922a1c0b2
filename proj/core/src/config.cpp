#include "memetect/config.hpp"

#include <charconv>
#include <cstdlib>

#include "json.hpp"
#include "memetect/errors.hpp"
#include "memetect/files.hpp"

namespace memetect {

using nlohmann::json;

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view want) {
  throw Error(ErrorCode::InvalidInput,
              "config " + std::string(key) + ": expected " + std::string(want) + ", got '" + std::string(value) + "'");
}

double as_double(std::string_view key, std::string_view v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "a number");
  return out;
}

double as_fraction(std::string_view key, std::string_view v) {
  const double d = as_double(key, v);
  if (d < 0.0 || d > 1.0) bad(key, v, "a number in [0, 1]");
  return d;
}

template <class T>
T as_uint(std::string_view key, std::string_view v) {
  T out = 0;
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    v.remove_prefix(2);
    base = 16;
  }
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "a non-negative integer");
  return out;
}

using Setter = void (*)(Config&, std::string_view, std::string_view);

struct Key {
  const char* name;
  Setter set;
};

// clang-format off
const Key kKeys[] = {
  {"ocr.backend", [](Config& c, std::string_view, std::string_view v) { c.ocr_backend = v; }},
  {"search.provider", [](Config& c, std::string_view k, std::string_view v) {
     if (v != "local" && v != "external") bad(k, v, "local or external");
     c.search_provider = v; }},
  {"search.index", [](Config& c, std::string_view, std::string_view v) { c.index_path = std::string(v); }},
  {"search.endpoint", [](Config& c, std::string_view, std::string_view v) { c.search_endpoint = v; }},
  {"search.api_key", [](Config& c, std::string_view, std::string_view v) { c.search_api_key = v; }},
  {"search.adapter", [](Config& c, std::string_view, std::string_view v) { c.search_adapter = v; }},
  {"search.cache_dir", [](Config& c, std::string_view, std::string_view v) { c.search_cache_dir = std::string(v); }},
  {"search.rate_limit", [](Config& c, std::string_view k, std::string_view v) {
     c.search_rate_limit = as_double(k, v);
     if (c.search_rate_limit <= 0) bad(k, v, "a positive rate"); }},
  {"search.timeout", [](Config& c, std::string_view k, std::string_view v) { c.search_timeout_seconds = as_uint<int>(k, v); }},
  {"search.n", [](Config& c, std::string_view k, std::string_view v) {
     c.engine.n = as_uint<std::size_t>(k, v);
     if (c.engine.n == 0) bad(k, v, "at least 1"); }},
  {"relate.tau_share", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.tau_share = as_fraction(k, v); }},
  {"relate.tau_novel", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.tau_novel = as_fraction(k, v); }},
  {"relate.tau_novel_visual", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.tau_novel_visual = as_fraction(k, v); }},
  {"relate.tau_feat", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.tau_feat = as_uint<int>(k, v); }},
  {"relate.text_containment", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.text_containment = as_fraction(k, v); }},
  {"relate.identity_distance", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.identity_distance = as_fraction(k, v); }},
  {"relate.identity_text", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.identity_text = as_fraction(k, v); }},
  {"relate.recrop_coverage", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.recrop_coverage = as_fraction(k, v); }},
  {"relate.pixel_difference", [](Config& c, std::string_view k, std::string_view v) { c.engine.thresholds.pixel_difference = as_uint<int>(k, v); }},
  {"protocol.modality_min_confidence", [](Config& c, std::string_view k, std::string_view v) { c.engine.modality_min_confidence = as_fraction(k, v); }},
  {"protocol.modality_max_coverage", [](Config& c, std::string_view k, std::string_view v) { c.engine.modality_max_coverage = as_fraction(k, v); }},
  {"protocol.trend_min_distance", [](Config& c, std::string_view k, std::string_view v) { c.engine.trend_min_distance = as_fraction(k, v); }},
  {"protocol.trend_min_hits", [](Config& c, std::string_view k, std::string_view v) { c.engine.trend_min_hits = as_uint<std::size_t>(k, v); }},
  {"audit.seed", [](Config& c, std::string_view k, std::string_view v) { c.seed = as_uint<std::uint64_t>(k, v); }},
  {"audit.k", [](Config& c, std::string_view k, std::string_view v) {
     c.k = as_uint<std::size_t>(k, v);
     if (c.k == 0) bad(k, v, "at least 1"); }},
  {"audit.jobs", [](Config& c, std::string_view k, std::string_view v) { c.jobs = std::max(1u, as_uint<unsigned>(k, v)); }},
  {"service.addr", [](Config& c, std::string_view, std::string_view v) { c.service_addr = v; }},
  {"service.store", [](Config& c, std::string_view, std::string_view v) { c.service_store = std::string(v); }},
  {"service.api_token", [](Config& c, std::string_view, std::string_view v) { c.service_api_token = v; }},
  {"service.max_upload", [](Config& c, std::string_view k, std::string_view v) { c.service_max_upload = as_uint<std::size_t>(k, v); }},
};
// clang-format on

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out);
    } else if (v.is_string()) {
      out.emplace_back(key, v.get<std::string>());
    } else if (v.is_number() || v.is_boolean()) {
      out.emplace_back(key, v.dump());
    } else {
      throw Error(ErrorCode::InvalidInput, "config " + key + ": unsupported value " + v.dump());
    }
  }
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : kKeys) out.emplace_back(k.name);
  return out;
}

void set_config_value(Config& c, std::string_view key, std::string_view value) {
  for (const auto& k : kKeys) {
    if (key == k.name) {
      k.set(c, key, value);
      return;
    }
  }
  throw Error(ErrorCode::InvalidInput, "unknown config key: " + std::string(key));
}

void apply_config_json(Config& c, std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, std::string("config file is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "config file must hold a JSON object");
  std::vector<std::pair<std::string, std::string>> flat;
  flatten(j, "", flat);
  for (const auto& [k, v] : flat) set_config_value(c, k, v);
}

std::optional<std::string> process_env(const char* name) {
  if (const char* v = std::getenv(name)) return std::string(v);
  return std::nullopt;
}

Config load_config(const std::optional<std::filesystem::path>& file,
                   const std::vector<std::pair<std::string, std::string>>& overrides, const EnvLookup& env) {
  Config c;
  std::optional<std::filesystem::path> path = file;
  if (!path) {
    if (auto p = env("MEMETECT_CONFIG"); p && !p->empty()) path = *p;
  }
  if (path) apply_config_json(c, read_text_file(*path));
  if (auto key = env("MEMETECT_SEARCH_API_KEY"); key && !key->empty()) c.search_api_key = *key;
  for (const auto& [k, v] : overrides) set_config_value(c, k, v);
  return c;
}

std::string config_to_json(const Config& c, int indent) {
  const auto& t = c.engine.thresholds;
  json j = {{"ocr.backend", c.ocr_backend},
            {"search.provider", c.search_provider},
            {"search.index", c.index_path.string()},
            {"search.endpoint", c.search_endpoint},
            {"search.api_key", c.search_api_key.empty() ? "" : "<redacted>"},
            {"search.adapter", c.search_adapter},
            {"search.cache_dir", c.search_cache_dir.string()},
            {"search.rate_limit", c.search_rate_limit},
            {"search.timeout", c.search_timeout_seconds},
            {"search.n", c.engine.n},
            {"relate.tau_share", t.tau_share},
            {"relate.tau_novel", t.tau_novel},
            {"relate.tau_novel_visual", t.tau_novel_visual},
            {"relate.tau_feat", t.tau_feat},
            {"relate.text_containment", t.text_containment},
            {"relate.identity_distance", t.identity_distance},
            {"relate.identity_text", t.identity_text},
            {"relate.recrop_coverage", t.recrop_coverage},
            {"relate.pixel_difference", t.pixel_difference},
            {"protocol.modality_min_confidence", c.engine.modality_min_confidence},
            {"protocol.modality_max_coverage", c.engine.modality_max_coverage},
            {"protocol.trend_min_distance", c.engine.trend_min_distance},
            {"protocol.trend_min_hits", c.engine.trend_min_hits},
            {"audit.seed", c.seed},
            {"audit.k", c.k},
            {"audit.jobs", c.jobs},
            {"service.addr", c.service_addr},
            {"service.store", c.service_store.string()},
            {"service.api_token", c.service_api_token.empty() ? "" : "<redacted>"},
            {"service.max_upload", c.service_max_upload}};
  return j.dump(indent);
}

}  // namespace memetect
