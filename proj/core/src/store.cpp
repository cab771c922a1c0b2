#include "memetect/store.hpp"

#include <sqlite3.h>

#include <mutex>

#include "memetect/errors.hpp"
#include "memetect/files.hpp"

namespace memetect {

namespace {

constexpr const char* kSchema = R"sql(
PRAGMA journal_mode = WAL;
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
INSERT OR IGNORE INTO meta VALUES ('schema_version', '1');
CREATE TABLE IF NOT EXISTS candidates (
  id TEXT PRIMARY KEY, width INTEGER NOT NULL, height INTEGER NOT NULL, bytes INTEGER NOT NULL,
  created_at TEXT NOT NULL DEFAULT (strftime('%Y-%m-%dT%H:%M:%fZ', 'now')));
CREATE TABLE IF NOT EXISTS sessions (
  id TEXT PRIMARY KEY, candidate_id TEXT NOT NULL REFERENCES candidates(id), mode TEXT NOT NULL,
  status TEXT NOT NULL, dataset TEXT NOT NULL, provider TEXT NOT NULL, trace TEXT NOT NULL,
  judgements TEXT NOT NULL, created_at TEXT NOT NULL, updated_at TEXT NOT NULL);
CREATE INDEX IF NOT EXISTS sessions_dataset ON sessions(dataset);
CREATE TABLE IF NOT EXISTS verdicts (
  session_id TEXT PRIMARY KEY REFERENCES sessions(id), candidate_id TEXT NOT NULL,
  verdict TEXT NOT NULL, created_at TEXT NOT NULL);
CREATE INDEX IF NOT EXISTS verdicts_candidate ON verdicts(candidate_id);
)sql";

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &st_, nullptr) != SQLITE_OK) fail("prepare");
  }
  ~Stmt() { sqlite3_finalize(st_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    if (sqlite3_bind_text(st_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT) != SQLITE_OK) fail("bind");
    return *this;
  }
  Stmt& bind(int i, long long v) {
    if (sqlite3_bind_int64(st_, i, v) != SQLITE_OK) fail("bind");
    return *this;
  }
  bool step() {
    const int rc = sqlite3_step(st_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail("step");
  }
  std::string text(int col) const {
    const auto* p = sqlite3_column_text(st_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(st_, col)))
             : std::string();
  }
  long long integer(int col) const { return sqlite3_column_int64(st_, col); }

 private:
  [[noreturn]] void fail(const char* what) const {
    throw Error(ErrorCode::Internal, std::string("sqlite ") + what + ": " + sqlite3_errmsg(db_));
  }
  sqlite3* db_;
  sqlite3_stmt* st_ = nullptr;
};

SessionRow session_from(const Stmt& s) {
  return {s.text(0), s.text(1), s.text(2), s.text(3), s.text(4), s.text(5), s.text(6), s.text(7), s.text(8), s.text(9)};
}

constexpr const char* kSessionColumns =
    "SELECT id, candidate_id, mode, status, dataset, provider, trace, judgements, created_at, updated_at FROM sessions";

}  // namespace

struct Store::Db {
  sqlite3* handle = nullptr;
  mutable std::mutex mu;
  ~Db() { sqlite3_close(handle); }
};

Store::Store(const std::filesystem::path& dir) : dir_(dir), db_(std::make_unique<Db>()) {
  std::error_code ec;
  std::filesystem::create_directories(dir_ / "blobs", ec);
  if (ec) throw Error(ErrorCode::InvalidInput, "cannot create store at " + dir_.string() + ": " + ec.message());
  const auto path = (dir_ / "memetect.db").string();
  if (sqlite3_open_v2(path.c_str(), &db_->handle, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    throw Error(ErrorCode::InvalidInput, "cannot open " + path + ": " + sqlite3_errmsg(db_->handle));
  }
  sqlite3_busy_timeout(db_->handle, 5000);
  char* err = nullptr;
  if (sqlite3_exec(db_->handle, kSchema, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown";
    sqlite3_free(err);
    throw Error(ErrorCode::Internal, "sqlite schema: " + msg);
  }
  Stmt v(db_->handle, "SELECT value FROM meta WHERE key = 'schema_version'");
  if (!v.step() || v.text(0) != "1") throw Error(ErrorCode::FormatVersion, "store written by another schema version");
}

Store::~Store() = default;

namespace {

std::filesystem::path blob_path(const std::filesystem::path& dir, const std::string& id) {
  return dir / "blobs" / id.substr(0, 2) / (id + ".bin");
}

}  // namespace

bool Store::put_candidate(const std::string& id, std::span<const std::uint8_t> encoded, int width, int height) {
  std::lock_guard lock(db_->mu);
  Stmt q(db_->handle, "SELECT 1 FROM candidates WHERE id = ?");
  q.bind(1, id);
  if (q.step()) return false;
  const auto path = blob_path(dir_, id);
  std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, encoded);
  Stmt ins(db_->handle, "INSERT INTO candidates (id, width, height, bytes) VALUES (?, ?, ?, ?)");
  ins.bind(1, id).bind(2, width).bind(3, height).bind(4, static_cast<long long>(encoded.size()));
  ins.step();
  return true;
}

bool Store::has_candidate(const std::string& id) const {
  std::lock_guard lock(db_->mu);
  Stmt q(db_->handle, "SELECT 1 FROM candidates WHERE id = ?");
  q.bind(1, id);
  return q.step();
}

RasterImage Store::load_candidate(const std::string& id) const {
  if (!has_candidate(id)) throw Error(ErrorCode::NotFound, "unknown candidate: " + id);
  return decode_image(read_file_bytes(blob_path(dir_, id)));
}

void Store::put_session(const SessionRow& r) {
  std::lock_guard lock(db_->mu);
  Stmt s(db_->handle,
         "INSERT INTO sessions (id, candidate_id, mode, status, dataset, provider, trace, judgements, created_at, "
         "updated_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?) ON CONFLICT(id) DO UPDATE SET status = excluded.status, "
         "trace = excluded.trace, judgements = excluded.judgements, updated_at = excluded.updated_at");
  s.bind(1, r.id).bind(2, r.candidate_id).bind(3, r.mode).bind(4, r.status).bind(5, r.dataset).bind(6, r.provider);
  s.bind(7, r.trace_json).bind(8, r.judgements_json).bind(9, r.created_at).bind(10, r.updated_at);
  s.step();
}

std::optional<SessionRow> Store::session(const std::string& id) const {
  std::lock_guard lock(db_->mu);
  Stmt s(db_->handle, (std::string(kSessionColumns) + " WHERE id = ?").c_str());
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return session_from(s);
}

std::vector<SessionRow> Store::sessions() const {
  std::lock_guard lock(db_->mu);
  Stmt s(db_->handle, (std::string(kSessionColumns) + " ORDER BY created_at, id").c_str());
  std::vector<SessionRow> out;
  while (s.step()) out.push_back(session_from(s));
  return out;
}

void Store::put_verdict(const VerdictRow& r) {
  std::lock_guard lock(db_->mu);
  Stmt s(db_->handle, "INSERT OR REPLACE INTO verdicts (session_id, candidate_id, verdict, created_at) VALUES (?, ?, ?, ?)");
  s.bind(1, r.session_id).bind(2, r.candidate_id).bind(3, r.verdict_json).bind(4, r.created_at);
  s.step();
}

std::vector<VerdictRow> Store::verdicts_for(const std::string& candidate_id) const {
  std::lock_guard lock(db_->mu);
  Stmt s(db_->handle,
         "SELECT session_id, candidate_id, verdict, created_at FROM verdicts WHERE candidate_id = ? ORDER BY created_at, "
         "session_id");
  s.bind(1, candidate_id);
  std::vector<VerdictRow> out;
  while (s.step()) out.push_back({s.text(0), s.text(1), s.text(2), s.text(3)});
  return out;
}

}  // namespace memetect
