#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memetect/search.hpp"

namespace memetect {

/// One result as an engine reports it.
struct ExternalResult {
  std::string id;
  std::string url;
  std::string text;
  std::optional<double> distance;
  std::vector<std::uint8_t> image;  // encoded PNG/JPEG, may be empty
};

struct AdapterRequest {
  std::string path;  // appended to the endpoint's path
  std::string content_type;
  std::string body;
};

/// Translates IS/TS queries to one engine's wire format and back.
class SearchAdapter {
 public:
  virtual ~SearchAdapter() = default;
  virtual std::string name() const = 0;
  virtual AdapterRequest image_request(std::span<const std::uint8_t> png, std::size_t n) const = 0;
  virtual AdapterRequest text_request(std::string_view query, std::size_t n) const = 0;
  /// Throws on a malformed body.
  virtual std::vector<ExternalResult> parse(std::string_view body) const = 0;
};

/// "json": POST <endpoint>/image?n=N with the PNG body, POST <endpoint>/text
/// with {"q", "n"}; both answer {"results": [{"id", "url", "text",
/// "distance"?, "image_base64"?}]}.
std::shared_ptr<const SearchAdapter> make_search_adapter(std::string_view name);

struct ExternalOptions {
  std::string endpoint;  // http(s)://host[:port][/prefix]
  std::string api_key;   // sent as a bearer token when set
  std::filesystem::path cache_dir;
  double rate_limit = 1.0;  // requests per second
  std::chrono::seconds timeout{30};
  std::shared_ptr<const SearchAdapter> adapter;
};

/// Web search client. Responses are cached on disk keyed by the query's
/// content digest and query type, so each distinct query reaches the network
/// at most once per cache lifetime; concurrent identical queries share one
/// request. Requests leave in arrival order, no faster than rate_limit.
/// Transport failures, non-2xx replies and unreadable bodies raise
/// ErrorCode::ProviderUnavailable.
class ExternalSearchClient final : public SearchProvider {
 public:
  explicit ExternalSearchClient(ExternalOptions options);
  ~ExternalSearchClient() override;

  std::string name() const override;
  std::vector<SearchHit> image_search(const RasterImage& query, std::size_t n,
                                      const SearchOptions& options = {}) const override;
  std::vector<SearchHit> text_search(std::string_view query, std::size_t n,
                                     const SearchOptions& options = {}) const override;

  std::size_t network_requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<std::uint8_t> base64_decode(std::string_view text);
std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace memetect
