#include "insight/service/store.hpp"

#include <sqlite3.h>

#include "insight/error.hpp"

namespace insight::service {

namespace {

using nlohmann::json;

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
      throw Error(ErrorCode::IoFailure, std::string("state store: ") + sqlite3_errmsg(db));
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }

  // True while a row is available.
  bool step() {
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if ((rc & 0xFF) == SQLITE_CONSTRAINT) throw Error(ErrorCode::NameConflict, sqlite3_errmsg(db_));
    throw Error(ErrorCode::IoFailure, std::string("state store: ") + sqlite3_errmsg(db_));
  }

  std::string text(int col) const {
    auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), sqlite3_column_bytes(stmt_, col)) : std::string{};
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS datasets (
  n INTEGER PRIMARY KEY,
  id TEXT NOT NULL UNIQUE,
  name TEXT NOT NULL UNIQUE,
  body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
  n INTEGER PRIMARY KEY,
  id TEXT NOT NULL UNIQUE,
  dataset_id TEXT NOT NULL,
  model_id TEXT NOT NULL,
  created_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS turns (
  n INTEGER PRIMARY KEY,
  id TEXT NOT NULL UNIQUE,
  session_id TEXT NOT NULL,
  status TEXT NOT NULL,
  body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS bookmarks (
  n INTEGER PRIMARY KEY,
  id TEXT NOT NULL UNIQUE,
  session_id TEXT NOT NULL,
  turn_id TEXT NOT NULL,
  sub_task_index INTEGER NOT NULL,
  label TEXT NOT NULL,
  created_at INTEGER NOT NULL
);
)sql";

std::int64_t next_n(sqlite3* db, const char* table) {
  Stmt s(db, (std::string("SELECT COALESCE(MAX(n), 0) + 1 FROM ") + table).c_str());
  s.step();
  return s.integer(0);
}

Session read_session(const Stmt& s) {
  return Session{s.text(0), s.text(1), s.text(2), s.integer(3)};
}

Bookmark read_bookmark(const Stmt& s) {
  return Bookmark{s.text(0), s.text(1), s.text(2), static_cast<std::size_t>(s.integer(3)), s.text(4), s.integer(5)};
}

}  // namespace

StateStore::StateStore(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (sqlite3_open_v2(path.string().c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error(ErrorCode::IoFailure, "cannot open state store " + path.string() + ": " + msg);
  }
  exec("PRAGMA journal_mode=WAL");
  exec(kSchema);
}

StateStore::~StateStore() { sqlite3_close(db_); }

void StateStore::exec(const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::IoFailure, "state store: " + msg);
  }
}

Dataset StateStore::insert_dataset(Dataset d) {
  std::lock_guard lock(mu_);
  {
    Stmt dup(db_, "SELECT 1 FROM datasets WHERE name = ?");
    if (dup.bind(1, d.name).step()) throw Error(ErrorCode::NameConflict, "dataset name already registered: " + d.name);
  }
  auto n = next_n(db_, "datasets");
  d.id = "ds_" + std::to_string(n);
  Stmt s(db_, "INSERT INTO datasets (n, id, name, body) VALUES (?, ?, ?, ?)");
  s.bind(1, n).bind(2, d.id).bind(3, d.name).bind(4, json(d).dump()).step();
  return d;
}

void StateStore::update_dataset_state(const std::string& id, HdcState state, const std::string& error) {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT body FROM datasets WHERE id = ?");
  if (!q.bind(1, id).step()) throw Error(ErrorCode::UnknownDataset, "unknown dataset: " + id);
  auto d = json::parse(q.text(0)).get<Dataset>();
  d.hdc_state = state;
  d.hdc_error = error;
  Stmt u(db_, "UPDATE datasets SET body = ? WHERE id = ?");
  u.bind(1, json(d).dump()).bind(2, id).step();
}

std::optional<Dataset> StateStore::dataset(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT body FROM datasets WHERE id = ?");
  if (!q.bind(1, id).step()) return std::nullopt;
  return json::parse(q.text(0)).get<Dataset>();
}

std::vector<Dataset> StateStore::datasets() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT body FROM datasets ORDER BY n");
  std::vector<Dataset> out;
  while (q.step()) out.push_back(json::parse(q.text(0)).get<Dataset>());
  return out;
}

Session StateStore::insert_session(Session s) {
  std::lock_guard lock(mu_);
  auto n = next_n(db_, "sessions");
  s.id = "s_" + std::to_string(n);
  Stmt q(db_, "INSERT INTO sessions (n, id, dataset_id, model_id, created_at) VALUES (?, ?, ?, ?, ?)");
  q.bind(1, n).bind(2, s.id).bind(3, s.dataset_id).bind(4, s.model_id).bind(5, s.created_at).step();
  return s;
}

void StateStore::update_session_model(const std::string& id, const std::string& model_id) {
  std::lock_guard lock(mu_);
  Stmt q(db_, "UPDATE sessions SET model_id = ? WHERE id = ?");
  q.bind(1, model_id).bind(2, id).step();
}

std::optional<Session> StateStore::session(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, dataset_id, model_id, created_at FROM sessions WHERE id = ?");
  if (!q.bind(1, id).step()) return std::nullopt;
  return read_session(q);
}

std::vector<Session> StateStore::sessions() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, dataset_id, model_id, created_at FROM sessions ORDER BY n");
  std::vector<Session> out;
  while (q.step()) out.push_back(read_session(q));
  return out;
}

Turn StateStore::insert_turn(Turn t) {
  std::lock_guard lock(mu_);
  auto n = next_n(db_, "turns");
  t.id = "t_" + std::to_string(n);
  Stmt c(db_, "SELECT COUNT(*) FROM turns WHERE session_id = ?");
  c.bind(1, t.session_id).step();
  t.seq = static_cast<std::size_t>(c.integer(0)) + 1;
  Stmt q(db_, "INSERT INTO turns (n, id, session_id, status, body) VALUES (?, ?, ?, ?, ?)");
  q.bind(1, n).bind(2, t.id).bind(3, t.session_id).bind(4, std::string(to_string(t.status))).bind(5, json(t).dump());
  q.step();
  return t;
}

void StateStore::update_turn(const Turn& t) {
  std::lock_guard lock(mu_);
  Stmt q(db_, "UPDATE turns SET status = ?, body = ? WHERE id = ?");
  q.bind(1, std::string(to_string(t.status))).bind(2, json(t).dump()).bind(3, t.id).step();
}

std::optional<Turn> StateStore::turn(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT body FROM turns WHERE id = ?");
  if (!q.bind(1, id).step()) return std::nullopt;
  return json::parse(q.text(0)).get<Turn>();
}

std::vector<Turn> StateStore::turns_of(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT body FROM turns WHERE session_id = ? ORDER BY n");
  q.bind(1, session_id);
  std::vector<Turn> out;
  while (q.step()) out.push_back(json::parse(q.text(0)).get<Turn>());
  return out;
}

std::vector<Turn> StateStore::turns_with_status(TurnStatus status) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT body FROM turns WHERE status = ? ORDER BY n");
  q.bind(1, std::string(to_string(status)));
  std::vector<Turn> out;
  while (q.step()) out.push_back(json::parse(q.text(0)).get<Turn>());
  return out;
}

Bookmark StateStore::insert_bookmark(Bookmark b) {
  std::lock_guard lock(mu_);
  auto n = next_n(db_, "bookmarks");
  b.id = "b_" + std::to_string(n);
  Stmt q(db_,
         "INSERT INTO bookmarks (n, id, session_id, turn_id, sub_task_index, label, created_at) "
         "VALUES (?, ?, ?, ?, ?, ?, ?)");
  q.bind(1, n).bind(2, b.id).bind(3, b.session_id).bind(4, b.turn_id);
  q.bind(5, static_cast<std::int64_t>(b.sub_task_index)).bind(6, b.label).bind(7, b.created_at).step();
  return b;
}

std::optional<Bookmark> StateStore::bookmark(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, session_id, turn_id, sub_task_index, label, created_at FROM bookmarks WHERE id = ?");
  if (!q.bind(1, id).step()) return std::nullopt;
  return read_bookmark(q);
}

std::vector<Bookmark> StateStore::bookmarks_of(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_,
         "SELECT id, session_id, turn_id, sub_task_index, label, created_at FROM bookmarks "
         "WHERE session_id = ? ORDER BY n");
  q.bind(1, session_id);
  std::vector<Bookmark> out;
  while (q.step()) out.push_back(read_bookmark(q));
  return out;
}

}  // namespace insight::service
