#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memetect/protocol.hpp"

namespace memetect {

struct Config {
  std::string ocr_backend = "glyph";

  std::string search_provider = "local";  // local | external
  std::filesystem::path index_path;
  std::string search_endpoint;
  std::string search_api_key;
  std::string search_adapter = "json";
  std::filesystem::path search_cache_dir;
  double search_rate_limit = 1.0;  // requests per second
  int search_timeout_seconds = 30;

  EngineConfig engine;

  std::uint64_t seed = 0;
  std::size_t k = 200;
  unsigned jobs = 1;

  std::string service_addr = "127.0.0.1:8080";
  std::filesystem::path service_store;
  std::string service_api_token;
  std::size_t service_max_upload = 20u * 1024 * 1024;
};

/// Dotted keys accepted by set_config_value and config files, e.g.
/// "relate.tau_share", "search.endpoint", "audit.seed".
std::vector<std::string> config_keys();

/// Parses `value` for `key`. Unknown keys and unparsable values raise
/// ErrorCode::InvalidInput naming the key.
void set_config_value(Config& c, std::string_view key, std::string_view value);

/// Applies a JSON object; nested objects and dotted keys are equivalent.
void apply_config_json(Config& c, std::string_view json_text);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

/// Precedence: overrides (flags) > environment > config file > defaults.
/// The file is `file` if given, else $MEMETECT_CONFIG if set.
Config load_config(const std::optional<std::filesystem::path>& file,
                   const std::vector<std::pair<std::string, std::string>>& overrides, const EnvLookup& env = process_env);

/// Effective configuration as a flat JSON object; secrets are redacted.
std::string config_to_json(const Config& c, int indent = -1);

}  // namespace memetect
