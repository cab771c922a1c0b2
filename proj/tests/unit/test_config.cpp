#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "json.hpp"

#include "memetect/config.hpp"
#include "memetect/errors.hpp"
#include "memetect/files.hpp"

using namespace memetect;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const char* name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = load_config(std::nullopt, {}, env_of({}));
  EXPECT_EQ(c.ocr_backend, "glyph");
  EXPECT_EQ(c.search_provider, "local");
  EXPECT_EQ(c.k, 200u);
  EXPECT_DOUBLE_EQ(c.engine.thresholds.tau_share, 0.85);
  EXPECT_EQ(c.engine.n, 50u);
}

TEST(Config, SetValues) {
  Config c;
  set_config_value(c, "relate.tau_feat", "30");
  set_config_value(c, "audit.seed", "0xDEADBEEF");
  set_config_value(c, "search.n", "10");
  set_config_value(c, "protocol.trend_min_hits", "3");
  EXPECT_EQ(c.engine.thresholds.tau_feat, 30);
  EXPECT_EQ(c.seed, 0xDEADBEEFULL);
  EXPECT_EQ(c.engine.n, 10u);
  EXPECT_EQ(c.engine.trend_min_hits, 3u);
  EXPECT_THROW(set_config_value(c, "relate.nope", "1"), Error);
  EXPECT_THROW(set_config_value(c, "relate.tau_share", "high"), Error);
  for (const auto& k : config_keys()) EXPECT_NE(k.find('.'), std::string::npos) << k;
}

TEST(Config, NestedAndDottedJsonAgree) {
  Config a, b;
  apply_config_json(a, R"({"relate": {"tau_novel": 0.4}, "search": {"provider": "external"}})");
  apply_config_json(b, R"({"relate.tau_novel": 0.4, "search.provider": "external"})");
  EXPECT_DOUBLE_EQ(a.engine.thresholds.tau_novel, 0.4);
  EXPECT_EQ(config_to_json(a), config_to_json(b));
  EXPECT_THROW(apply_config_json(a, "[1,2]"), Error);
  EXPECT_THROW(apply_config_json(a, "{bad"), Error);
}

TEST(Config, Precedence) {
  const auto dir = std::filesystem::temp_directory_path() / "memetect-config-test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "c.json";
  write_file_atomic(file, std::string_view(R"({"search": {"api_key": "from-file", "rate_limit": 5}, "audit": {"k": 50}})"));

  auto c = load_config(file, {}, env_of({}));
  EXPECT_EQ(c.search_api_key, "from-file");
  EXPECT_EQ(c.k, 50u);

  c = load_config(file, {}, env_of({{"MEMETECT_SEARCH_API_KEY", "from-env"}}));
  EXPECT_EQ(c.search_api_key, "from-env");

  c = load_config(file, {{"search.api_key", "from-flag"}, {"audit.k", "7"}},
                  env_of({{"MEMETECT_SEARCH_API_KEY", "from-env"}}));
  EXPECT_EQ(c.search_api_key, "from-flag");
  EXPECT_EQ(c.k, 7u);
  EXPECT_DOUBLE_EQ(c.search_rate_limit, 5.0);

  c = load_config(std::nullopt, {}, env_of({{"MEMETECT_CONFIG", file.string()}}));
  EXPECT_EQ(c.k, 50u);

  EXPECT_THROW(load_config(dir / "missing.json", {}, env_of({})), Error);
  std::filesystem::remove_all(dir);
}

TEST(Config, SecretsRedacted) {
  Config c;
  c.search_api_key = "sk-secret";
  c.service_api_token = "tok-secret";
  const auto text = config_to_json(c);
  EXPECT_EQ(text.find("sk-secret"), std::string::npos);
  EXPECT_EQ(text.find("tok-secret"), std::string::npos);
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["search.api_key"], "<redacted>");
}
