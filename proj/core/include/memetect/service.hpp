#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "memetect/ocr.hpp"
#include "memetect/protocol.hpp"
#include "memetect/search.hpp"

namespace httplib {
class Server;
}

namespace memetect {

struct ServiceOptions {
  std::filesystem::path store_dir;
  std::map<std::string, std::shared_ptr<const SearchProvider>> providers;  // by request name
  std::string default_provider;  // first provider when empty
  std::shared_ptr<const TextExtractor> ocr;
  EngineConfig engine;
  std::string api_token;  // bearer token; empty disables the check
  std::size_t max_upload = 20u * 1024 * 1024;
};

/// Response body plus HTTP status. Bodies are JSON with "schema_version";
/// errors are problem documents with a machine-readable "code".
struct ApiResponse {
  int status = 200;
  std::string body;
  bool problem = false;
};

/// HTTP front for protocol sessions. Handlers are plain methods so they can
/// be exercised without a socket; routes() binds them to an httplib server.
/// Sessions left open by a previous process are rebuilt on construction by
/// replaying their recorded judgements.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  ApiResponse create_candidate(std::span<const std::uint8_t> bytes);
  ApiResponse start_session(std::string_view json_body);
  ApiResponse get_session(const std::string& id);
  ApiResponse submit_judgement(const std::string& id, std::string_view json_body);
  ApiResponse verdicts(const std::string& candidate_id);
  ApiResponse report(const std::string& dataset);
  ApiResponse health();

  /// Checks the bearer token; empty optional when authorized.
  std::optional<ApiResponse> authorize(std::string_view authorization_header) const;

  void routes(httplib::Server& server);

  /// Binds `addr` ("host:port") and serves until stop(). Throws InvalidInput
  /// if the address cannot be bound.
  void listen(const std::string& addr);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace memetect
