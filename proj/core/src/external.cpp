#include "memetect/external.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <future>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "memetect/errors.hpp"
#include "memetect/files.hpp"
#include "memetect/fingerprint.hpp"
#include "memetect/text.hpp"

namespace memetect {

using nlohmann::json;

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  if (clean.size() % 4 != 0) throw Error(ErrorCode::InvalidInput, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw Error(ErrorCode::InvalidInput, "invalid base64");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

namespace {

class JsonAdapter final : public SearchAdapter {
 public:
  std::string name() const override { return "json"; }

  AdapterRequest image_request(std::span<const std::uint8_t> png, std::size_t n) const override {
    return {"/image?n=" + std::to_string(n), "image/png", std::string(png.begin(), png.end())};
  }

  AdapterRequest text_request(std::string_view query, std::size_t n) const override {
    return {"/text", "application/json", json{{"q", query}, {"n", n}}.dump()};
  }

  std::vector<ExternalResult> parse(std::string_view body) const override {
    const json j = json::parse(body);
    std::vector<ExternalResult> out;
    for (const auto& r : j.at("results")) {
      ExternalResult e;
      e.id = r.at("id").get<std::string>();
      e.url = r.value("url", "");
      e.text = r.value("text", "");
      if (r.contains("distance") && !r["distance"].is_null()) e.distance = r["distance"].get<double>();
      if (r.contains("image_base64")) e.image = base64_decode(r["image_base64"].get<std::string>());
      out.push_back(std::move(e));
    }
    return out;
  }
};

}  // namespace

std::shared_ptr<const SearchAdapter> make_search_adapter(std::string_view name) {
  if (name == "json") return std::make_shared<JsonAdapter>();
  throw Error(ErrorCode::BackendMissing, "unknown search adapter: " + std::string(name));
}

struct ExternalSearchClient::Impl {
  ExternalOptions opt;
  std::string origin;  // scheme://host:port
  std::string prefix;

  std::mutex flight_mu;
  std::map<std::string, std::shared_future<std::string>> in_flight;

  std::mutex rate_mu;
  std::chrono::steady_clock::time_point next_slot{};

  std::atomic<std::size_t> requests{0};

  explicit Impl(ExternalOptions o) : opt(std::move(o)) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(opt.endpoint, m, re)) {
      throw Error(ErrorCode::InvalidInput, "search.endpoint must be an http(s) URL: '" + opt.endpoint + "'");
    }
    origin = m[1];
    prefix = m[2].matched ? m[2].str() : "";
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    if (!opt.adapter) opt.adapter = make_search_adapter("json");
    if (opt.rate_limit <= 0) throw Error(ErrorCode::InvalidInput, "rate limit must be positive");
  }

  void wait_for_slot() {
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / opt.rate_limit));
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(rate_mu);
      slot = std::max(std::chrono::steady_clock::now(), next_slot);
      next_slot = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }

  std::string fetch(const AdapterRequest& req) {
    wait_for_slot();
    ++requests;
    httplib::Client cli(origin);
    cli.set_connection_timeout(opt.timeout);
    cli.set_read_timeout(opt.timeout);
    httplib::Headers headers;
    if (!opt.api_key.empty()) headers.emplace("Authorization", "Bearer " + opt.api_key);
    auto res = cli.Post(prefix + req.path, headers, req.body, req.content_type);
    if (!res) {
      throw Error(ErrorCode::ProviderUnavailable, "search request failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::ProviderUnavailable, "search endpoint answered HTTP " + std::to_string(res->status));
    }
    try {
      opt.adapter->parse(res->body);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ProviderUnavailable, std::string("unreadable search response: ") + e.what());
    }
    return res->body;
  }

  std::filesystem::path cache_path(const std::string& key) const { return opt.cache_dir / (key + ".json"); }

  // Body for `key`, from the cache, a concurrent caller's request, or the network.
  std::string body_for(const std::string& key, const AdapterRequest& req) {
    if (!opt.cache_dir.empty()) {
      std::error_code ec;
      if (std::filesystem::exists(cache_path(key), ec)) return read_text_file(cache_path(key));
    }
    std::promise<std::string> promise;
    std::shared_future<std::string> fut;
    bool owner = false;
    {
      std::lock_guard lock(flight_mu);
      if (auto it = in_flight.find(key); it != in_flight.end()) {
        fut = it->second;
      } else {
        fut = promise.get_future().share();
        in_flight.emplace(key, fut);
        owner = true;
      }
    }
    if (!owner) return fut.get();
    try {
      std::string body = fetch(req);
      if (!opt.cache_dir.empty()) {
        std::filesystem::create_directories(opt.cache_dir);
        write_file_atomic(cache_path(key), body);
      }
      promise.set_value(body);
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    {
      std::lock_guard lock(flight_mu);
      in_flight.erase(key);
    }
    return fut.get();
  }

  std::vector<SearchHit> to_hits(std::vector<ExternalResult> results, std::size_t n, const SearchOptions& options,
                                 const Fingerprint* query_fp, std::string_view text_query) const {
    std::vector<SearchHit> hits;
    for (auto& r : results) {
      if (hits.size() == n) break;
      if (std::find(options.exclude_ids.begin(), options.exclude_ids.end(), r.id) != options.exclude_ids.end()) continue;
      SearchHit h;
      h.hit_id = r.id;
      h.origin = Origin::ExternalService;
      h.source_url = r.url;
      h.text = text::normalize(r.text);
      h.visual_distance = r.distance ? std::clamp(*r.distance, 0.0, 1.0) : 1.0;
      if (!text_query.empty()) h.text_score = text::containment(text_query, h.text);
      if (!r.image.empty()) {
        try {
          auto img = std::make_shared<const RasterImage>(decode_image(r.image));
          h.fingerprint = std::make_shared<const Fingerprint>(fingerprint(*img));
          if (!r.distance && query_fp) h.visual_distance = visual_distance(*query_fp, *h.fingerprint);
          h.load_image = [img] { return img; };
        } catch (const Error&) {
          // undecodable thumbnail: keep the hit, without pixels
        }
      }
      hits.push_back(std::move(h));
    }
    return hits;
  }
};

ExternalSearchClient::ExternalSearchClient(ExternalOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
ExternalSearchClient::~ExternalSearchClient() = default;

std::string ExternalSearchClient::name() const { return "external:" + impl_->opt.adapter->name(); }

std::size_t ExternalSearchClient::network_requests() const { return impl_->requests.load(); }

std::vector<SearchHit> ExternalSearchClient::image_search(const RasterImage& query, std::size_t n,
                                                          const SearchOptions& options) const {
  if (n == 0) throw Error(ErrorCode::InvalidInput, "result count must be at least 1");
  const std::string key = query.content_digest().hex() + "-image-" + std::to_string(n);
  const auto png = encode_png(query);
  const std::string body = impl_->body_for(key, impl_->opt.adapter->image_request(png, n));
  const Fingerprint qfp = fingerprint(query, options.query_text_boxes);
  auto hits = impl_->to_hits(impl_->opt.adapter->parse(body), n, options, &qfp, {});
  std::stable_sort(hits.begin(), hits.end(),
                   [](const SearchHit& a, const SearchHit& b) { return a.visual_distance < b.visual_distance; });
  return hits;
}

std::vector<SearchHit> ExternalSearchClient::text_search(std::string_view query, std::size_t n,
                                                         const SearchOptions& options) const {
  if (n == 0) throw Error(ErrorCode::InvalidInput, "result count must be at least 1");
  const std::string key = Digest::of(query).hex() + "-text-" + std::to_string(n);
  const std::string body = impl_->body_for(key, impl_->opt.adapter->text_request(query, n));
  auto hits = impl_->to_hits(impl_->opt.adapter->parse(body), n, options, nullptr, query);
  std::stable_sort(hits.begin(), hits.end(),
                   [](const SearchHit& a, const SearchHit& b) { return a.text_score > b.text_score; });
  return hits;
}

}  // namespace memetect
