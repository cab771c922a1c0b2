#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "memetect/errors.hpp"
#include "memetect/external.hpp"
#include "memetect/synth.hpp"

using namespace memetect;
using json = nlohmann::json;

namespace {

// Minimal search engine speaking the "json" adapter's wire format.
class FakeEngine {
 public:
  std::atomic<int> image_calls{0}, text_calls{0};
  std::atomic<int> status{200};
  std::atomic<int> delay_ms{0};
  std::string last_auth;
  std::string body_override;

  FakeEngine() {
    server_.Post("/api/image", [this](const httplib::Request& req, httplib::Response& res) {
      ++image_calls;
      last_auth = req.get_header_value("Authorization");
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms.load()));
      const auto n = std::stoi(req.get_param_value("n"));
      json results = json::array();
      const auto png = encode_png(synth::photo(5, 64, 64));
      results.push_back({{"id", "with-distance"}, {"url", "http://x/1"}, {"text", "HELLO There"}, {"distance", 0.1}});
      results.push_back({{"id", "with-image"}, {"url", "http://x/2"}, {"text", ""},
                         {"image_base64", base64_encode(png)}});
      results.push_back({{"id", "bare"}, {"url", "http://x/3"}, {"text", "bare"}});
      while (static_cast<int>(results.size()) > n) results.erase(results.end() - 1);
      reply(res, json{{"results", results}}.dump());
    });
    server_.Post("/api/text", [this](const httplib::Request& req, httplib::Response& res) {
      ++text_calls;
      const auto q = json::parse(req.body);
      reply(res, json{{"results", {{{"id", "t1"}, {"url", "u"}, {"text", q["q"].get<std::string>() + " extra"}}}}}.dump());
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEngine() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/api"; }

 private:
  void reply(httplib::Response& res, const std::string& body) {
    res.status = status.load();
    res.set_content(body_override.empty() ? body : body_override, "application/json");
  }
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("memetect-ext-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

ExternalOptions options(const FakeEngine& e, const std::filesystem::path& cache, double rate = 1000.0) {
  ExternalOptions o;
  o.endpoint = e.endpoint();
  o.api_key = "k123";
  o.cache_dir = cache;
  o.rate_limit = rate;
  o.timeout = std::chrono::seconds(5);
  o.adapter = make_search_adapter("json");
  return o;
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

TEST(External, ParsesResults) {
  FakeEngine engine;
  TempDir cache;
  ExternalSearchClient client(options(engine, cache.path));
  const auto hits = client.image_search(synth::photo(5, 64, 64), 10);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(engine.last_auth, "Bearer k123");
  for (const auto& h : hits) EXPECT_EQ(h.origin, Origin::ExternalService);
  std::map<std::string, SearchHit> by_id;
  for (const auto& h : hits) by_id[h.hit_id] = h;
  EXPECT_DOUBLE_EQ(by_id["with-distance"].visual_distance, 0.1);
  EXPECT_EQ(by_id["with-distance"].text, "hello there");
  EXPECT_LT(by_id["with-image"].visual_distance, 0.05);  // the same picture came back
  ASSERT_TRUE(by_id["with-image"].image());
  EXPECT_DOUBLE_EQ(by_id["bare"].visual_distance, 1.0);
  EXPECT_EQ(by_id["bare"].source_url, "http://x/3");
  // Ascending distance.
  for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_LE(hits[i - 1].visual_distance, hits[i].visual_distance);
}

TEST(External, HonoursLimitAndExclusion) {
  FakeEngine engine;
  TempDir cache;
  ExternalSearchClient client(options(engine, cache.path));
  EXPECT_EQ(client.image_search(synth::photo(6), 2).size(), 2u);
  SearchOptions opt;
  opt.exclude_ids = {"bare"};
  for (const auto& h : client.image_search(synth::photo(7), 10, opt)) EXPECT_NE(h.hit_id, "bare");
}

TEST(External, TextSearch) {
  FakeEngine engine;
  TempDir cache;
  ExternalSearchClient client(options(engine, cache.path));
  const auto hits = client.text_search("cats on the moon", 5);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_DOUBLE_EQ(hits[0].text_score, 1.0);
  EXPECT_EQ(engine.text_calls, 1);
}

TEST(External, DiskCacheSurvivesClient) {
  FakeEngine engine;
  TempDir cache;
  const auto img = synth::photo(8);
  {
    ExternalSearchClient client(options(engine, cache.path));
    client.image_search(img, 10);
    client.image_search(img, 10);
    client.text_search("q words", 10);
    client.text_search("q words", 10);
    EXPECT_EQ(client.network_requests(), 2u);
  }
  ExternalSearchClient again(options(engine, cache.path));
  const auto hits = again.image_search(img, 10);
  EXPECT_EQ(hits.size(), 3u);
  again.text_search("q words", 10);
  EXPECT_EQ(again.network_requests(), 0u);
  EXPECT_EQ(engine.image_calls, 1);
  EXPECT_EQ(engine.text_calls, 1);
  // A different n is a different query.
  again.image_search(img, 2);
  EXPECT_EQ(engine.image_calls, 2);
}

TEST(External, ConcurrentIdenticalQueriesShareOneRequest) {
  FakeEngine engine;
  engine.delay_ms = 300;
  TempDir cache;
  ExternalSearchClient client(options(engine, cache.path));
  const auto img = synth::photo(9);
  std::vector<std::future<std::size_t>> f;
  for (int i = 0; i < 4; ++i)
    f.push_back(std::async(std::launch::async, [&] { return client.image_search(img, 10).size(); }));
  for (auto& x : f) EXPECT_EQ(x.get(), 3u);
  EXPECT_EQ(engine.image_calls, 1);
}

TEST(External, RateLimited) {
  FakeEngine engine;
  TempDir cache;
  ExternalSearchClient client(options(engine, cache.path, 10.0));
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) client.text_search("query " + std::to_string(i), 5);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GE(secs, 0.28);  // three gaps of 100 ms
}

TEST(External, FailuresAreProviderUnavailable) {
  FakeEngine engine;
  TempDir cache;
  ExternalSearchClient client(options(engine, cache.path));
  engine.status = 503;
  EXPECT_EQ(code_of([&] { client.image_search(synth::photo(10), 5); }), ErrorCode::ProviderUnavailable);
  engine.status = 200;
  engine.body_override = "{not json";
  EXPECT_EQ(code_of([&] { client.text_search("x y", 5); }), ErrorCode::ProviderUnavailable);
  engine.body_override.clear();
  // Failures are not cached.
  EXPECT_EQ(client.image_search(synth::photo(10), 5).size(), 3u);

  ExternalOptions dead = options(engine, cache.path);
  dead.endpoint = "http://127.0.0.1:1/api";
  ExternalSearchClient nobody(dead);
  EXPECT_EQ(code_of([&] { nobody.text_search("x", 5); }), ErrorCode::ProviderUnavailable);
}

TEST(External, BadConfiguration) {
  EXPECT_EQ(code_of([] { make_search_adapter("soap"); }), ErrorCode::BackendMissing);
  ExternalOptions o;
  o.endpoint = "not a url";
  o.adapter = make_search_adapter("json");
  EXPECT_EQ(code_of([&] { ExternalSearchClient c(o); }), ErrorCode::InvalidInput);
}

TEST(Base64, RoundTrip) {
  const std::vector<std::uint8_t> bytes = {0, 1, 2, 250, 255, 'a'};
  EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'f', 'o', 'o'}), "Zm9v");
}
