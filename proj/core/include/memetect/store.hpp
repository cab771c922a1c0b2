#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memetect/image.hpp"

namespace memetect {

struct SessionRow {
  std::string id;
  std::string candidate_id;
  std::string mode;
  std::string status;
  std::string dataset;
  std::string provider;
  std::string trace_json;
  std::string judgements_json;  // submitted human decisions, in order
  std::string created_at;
  std::string updated_at;
};

struct VerdictRow {
  std::string session_id;
  std::string candidate_id;
  std::string verdict_json;
  std::string created_at;
};

/// Content-addressed blob directory plus one SQLite file for sessions and
/// verdicts. Every write is a single statement, hence atomic per record.
/// Safe to share between threads.
class Store {
 public:
  explicit Store(const std::filesystem::path& dir);
  ~Store();

  /// Stores the encoded bytes under the pixel digest. Returns true when new.
  bool put_candidate(const std::string& id, std::span<const std::uint8_t> encoded, int width, int height);
  bool has_candidate(const std::string& id) const;
  RasterImage load_candidate(const std::string& id) const;

  void put_session(const SessionRow& row);
  std::optional<SessionRow> session(const std::string& id) const;
  std::vector<SessionRow> sessions() const;

  void put_verdict(const VerdictRow& row);
  std::vector<VerdictRow> verdicts_for(const std::string& candidate_id) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  struct Db;
  std::filesystem::path dir_;
  std::unique_ptr<Db> db_;
};

}  // namespace memetect
