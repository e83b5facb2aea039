#include <sqlite3.h>

#include <filesystem>
#include <mutex>

#include "insight/catalog/engine.hpp"
#include "insight/catalog/sql_text.hpp"
#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::catalog {

namespace {

struct StmtDeleter {
  void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};
using StmtPtr = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

Value read_value(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, col);
    case SQLITE_NULL: return std::monostate{};
    case SQLITE_BLOB: {
      auto n = sqlite3_column_bytes(stmt, col);
      return "<blob " + std::to_string(n) + " bytes>";
    }
    default: {
      const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
      return std::string(text ? text : "");
    }
  }
}

bool is_connection_error(int rc) {
  int primary = rc & 0xFF;
  return primary == SQLITE_CANTOPEN || primary == SQLITE_IOERR || primary == SQLITE_CORRUPT ||
         primary == SQLITE_NOTADB || primary == SQLITE_NOMEM;
}

// Trailing "-- comment" text after each column definition in a CREATE TABLE.
std::vector<std::pair<std::string, std::string>> column_comments(std::string_view create_sql) {
  std::vector<std::pair<std::string, std::string>> out;
  auto open = create_sql.find('(');
  if (open == std::string_view::npos) return out;

  struct Segment {
    std::size_t start;
    std::string first_word;
  };
  std::vector<Segment> segments;
  std::vector<std::pair<std::size_t, std::string>> comments;

  int depth = 0;
  bool seeking = true;
  std::size_t i = open + 1;
  while (i < create_sql.size()) {
    char c = create_sql[i];
    if (c == '-' && i + 1 < create_sql.size() && create_sql[i + 1] == '-') {
      auto end = create_sql.find('\n', i);
      if (end == std::string_view::npos) end = create_sql.size();
      comments.emplace_back(i, util::trim(create_sql.substr(i + 2, end - i - 2)));
      i = end;
      continue;
    }
    if (c == '\'' || c == '"' || c == '`' || c == '[') {
      char close = c == '[' ? ']' : c;
      std::size_t j = i + 1;
      while (j < create_sql.size() && create_sql[j] != close) ++j;
      if (seeking && depth == 0) {
        segments.push_back({i, std::string(create_sql.substr(i + 1, j - i - 1))});
        seeking = false;
      }
      i = j + 1;
      continue;
    }
    if (c == '(') ++depth;
    if (c == ')') {
      if (depth == 0) break;
      --depth;
    }
    if (c == ',' && depth == 0) {
      seeking = true;
    } else if (seeking && depth == 0 && !std::isspace(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < create_sql.size() &&
             (std::isalnum(static_cast<unsigned char>(create_sql[j])) || create_sql[j] == '_'))
        ++j;
      segments.push_back({i, std::string(create_sql.substr(i, j - i))});
      seeking = false;
      i = std::max(j, i + 1);
      continue;
    }
    ++i;
  }

  for (const auto& [pos, text] : comments) {
    // A comment on its own line does not describe the previous column.
    auto line_start = create_sql.rfind('\n', pos);
    line_start = line_start == std::string_view::npos ? 0 : line_start + 1;
    if (util::trim(create_sql.substr(line_start, pos - line_start)).empty()) continue;
    const Segment* owner = nullptr;
    for (const auto& seg : segments)
      if (seg.start < pos) owner = &seg;
    if (owner && !text.empty()) out.emplace_back(owner->first_word, text);
  }
  return out;
}

class SqliteEngine final : public SqlEngine {
 public:
  SqliteEngine(const std::string& path, EngineOptions options) : options_(options) {
    if (!std::filesystem::exists(path))
      throw Error(ErrorCode::ConnectionFailed, "database file not found: " + path);
    int rc = sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READONLY | SQLITE_OPEN_FULLMUTEX,
                             nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      db_ = nullptr;
      throw Error(ErrorCode::ConnectionFailed, "cannot open " + path + ": " + msg);
    }
    name_ = std::filesystem::path(path).stem().string();
    sqlite3_progress_handler(db_, 1000, &SqliteEngine::on_progress, this);
  }

  ~SqliteEngine() override { sqlite3_close(db_); }

  SqliteEngine(const SqliteEngine&) = delete;
  SqliteEngine& operator=(const SqliteEngine&) = delete;

  std::string dialect_id() const override { return "sqlite"; }

  std::string quote_identifier(std::string_view name) const override {
    std::string out = "\"";
    for (char c : name) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
    return out;
  }

  DatabaseSchema introspect() override {
    std::lock_guard lock(mu_);
    DatabaseSchema schema;
    schema.database_name = name_;
    schema.dialect_id = dialect_id();

    std::vector<std::pair<std::string, std::string>> tables;
    meta_scan(
        "SELECT name, COALESCE(sql, '') FROM sqlite_master WHERE type = 'table' "
        "AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY name",
        [&](const Row& r) {
          tables.emplace_back(std::get<std::string>(r[0]), std::get<std::string>(r[1]));
        });

    for (const auto& [table_name, create_sql] : tables) {
      TableDef t;
      t.name = table_name;
      std::vector<std::pair<std::int64_t, std::string>> pk;
      meta_scan("PRAGMA table_info(" + quote_identifier(table_name) + ")", [&](const Row& r) {
        ColumnDef c;
        c.name = std::get<std::string>(r[1]);
        c.sql_type = value_to_text(r[2]);
        c.nullable = std::get<std::int64_t>(r[3]) == 0;
        auto pk_pos = std::get<std::int64_t>(r[5]);
        if (pk_pos > 0) pk.emplace_back(pk_pos, c.name);
        t.columns.push_back(std::move(c));
      });
      if (t.columns.empty())
        throw Error(ErrorCode::InvalidArgument, "table has no columns: " + table_name);
      std::sort(pk.begin(), pk.end());
      for (auto& [_, name] : pk) t.declared_primary_key.push_back(name);

      meta_scan("PRAGMA foreign_key_list(" + quote_identifier(table_name) + ")", [&](const Row& r) {
        ForeignKey fk;
        fk.ref_table = std::get<std::string>(r[2]);
        fk.column = std::get<std::string>(r[3]);
        fk.ref_column = value_to_text(r[4]);
        t.foreign_keys.push_back(std::move(fk));
      });
      std::sort(t.foreign_keys.begin(), t.foreign_keys.end(), [](const auto& a, const auto& b) {
        return std::tie(a.column, a.ref_table) < std::tie(b.column, b.ref_table);
      });
      for (auto& fk : t.foreign_keys) {
        if (fk.ref_column == "NULL" || fk.ref_column.empty()) fk.ref_column = fk.column;
      }

      for (auto& [col, comment] : column_comments(create_sql))
        for (auto& c : t.columns)
          if (util::iequals(c.name, col)) c.comment = comment;

      meta_scan("SELECT COUNT(*) FROM " + quote_identifier(table_name),
                [&](const Row& r) { t.row_count_estimate = std::get<std::int64_t>(r[0]); });
      schema.tables.push_back(std::move(t));
    }
    return schema;
  }

  std::string explain(std::string_view sql) override {
    std::lock_guard lock(mu_);
    std::string plan_sql = "EXPLAIN QUERY PLAN " + std::string(sql);
    StmtPtr stmt = prepare(plan_sql, /*statement_level=*/true);
    std::string plan;
    arm_deadline();
    int rc;
    while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
      const auto* t = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), 3));
      if (!plan.empty()) plan += "\n";
      plan += t ? t : "";
    }
    if (rc != SQLITE_DONE) fail_step(rc);
    return plan;
  }

  std::vector<ResultColumn> scan(std::string_view sql, const RowSink& sink) override {
    std::lock_guard lock(mu_);
    StmtPtr stmt = prepare(sql, /*statement_level=*/true);
    if (!sqlite3_stmt_readonly(stmt.get()))
      throw Error(ErrorCode::NonReadOnly, "statement would modify the database");
    int ncol = sqlite3_column_count(stmt.get());
    std::vector<ResultColumn> cols;
    for (int i = 0; i < ncol; ++i) {
      const char* decl = sqlite3_column_decltype(stmt.get(), i);
      cols.push_back({sqlite3_column_name(stmt.get(), i), decl ? decl : ""});
    }
    arm_deadline();
    int rc;
    Row row(static_cast<std::size_t>(ncol));
    while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
      for (int i = 0; i < ncol; ++i) row[static_cast<std::size_t>(i)] = read_value(stmt.get(), i);
      if (!sink(row)) return cols;
    }
    if (rc != SQLITE_DONE) fail_step(rc);
    return cols;
  }

 private:
  static int on_progress(void* self) {
    auto* engine = static_cast<SqliteEngine*>(self);
    return std::chrono::steady_clock::now() > engine->deadline_ ? 1 : 0;
  }

  void arm_deadline() { deadline_ = std::chrono::steady_clock::now() + options_.statement_timeout; }

  StmtPtr prepare(std::string_view sql, bool statement_level) {
    sqlite3_stmt* raw = nullptr;
    const char* tail = nullptr;
    arm_deadline();
    int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &raw, &tail);
    StmtPtr stmt(raw);
    if (rc != SQLITE_OK) {
      std::string msg = sqlite3_errmsg(db_);
      if (is_connection_error(rc)) throw Error(ErrorCode::EngineUnavailable, msg);
      if ((rc & 0xFF) == SQLITE_AUTH) throw Error(ErrorCode::PermissionDenied, msg);
      throw Error(statement_level ? ErrorCode::SqlError : ErrorCode::PermissionDenied, msg);
    }
    if (!stmt) throw Error(ErrorCode::SqlError, "empty statement");
    if (tail && !util::trim(strip_sql_comments(tail)).empty())
      throw Error(ErrorCode::SqlError, "multiple statements are not supported");
    return stmt;
  }

  [[noreturn]] void fail_step(int rc) {
    std::string msg = sqlite3_errmsg(db_);
    if ((rc & 0xFF) == SQLITE_INTERRUPT)
      throw Error(ErrorCode::SqlError, "statement timed out after " +
                                           std::to_string(options_.statement_timeout.count()) + " ms");
    if (is_connection_error(rc)) throw Error(ErrorCode::EngineUnavailable, msg);
    throw Error(ErrorCode::SqlError, msg);
  }

  template <class Fn>
  void meta_scan(const std::string& sql, Fn&& fn) {
    StmtPtr stmt = prepare(sql, /*statement_level=*/false);
    int ncol = sqlite3_column_count(stmt.get());
    int rc;
    Row row(static_cast<std::size_t>(ncol));
    while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
      for (int i = 0; i < ncol; ++i) row[static_cast<std::size_t>(i)] = read_value(stmt.get(), i);
      fn(row);
    }
    if (rc != SQLITE_DONE) {
      std::string msg = sqlite3_errmsg(db_);
      throw Error(is_connection_error(rc) ? ErrorCode::ConnectionFailed : ErrorCode::PermissionDenied,
                  msg);
    }
  }

  sqlite3* db_ = nullptr;
  std::string name_;
  EngineOptions options_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point deadline_{};
};

}  // namespace

RawResult SqlEngine::query(std::string_view sql, std::size_t row_cap) {
  RawResult result;
  result.columns = scan(sql, [&](const Row& r) {
    if (result.rows.size() >= row_cap) {
      result.truncated = true;
      return false;
    }
    result.rows.push_back(r);
    return true;
  });
  return result;
}

std::unique_ptr<SqlEngine> open_engine(std::string_view connection_spec, EngineOptions options) {
  constexpr std::string_view kSqlite = "sqlite:";
  if (connection_spec.rfind(kSqlite, 0) != 0)
    throw Error(ErrorCode::ConnectionFailed,
                "unsupported connection spec (expected sqlite:<path>): " + std::string(connection_spec));
  std::string path(connection_spec.substr(kSqlite.size()));
  if (path.rfind("//", 0) == 0) path = path.substr(2);
  return std::make_unique<SqliteEngine>(path, options);
}

MutationCounter& MutationCounter::global() {
  static MutationCounter counter;
  return counter;
}

ReadOnlyGuard::ReadOnlyGuard(std::unique_ptr<SqlEngine> inner, MutationCounter& counter)
    : inner_(std::move(inner)), counter_(counter) {}

void ReadOnlyGuard::check(std::string_view sql) {
  if (!is_read_only_statement(sql)) {
    counter_.record();
    throw Error(ErrorCode::NonReadOnly, "rejected non-read statement: " + util::collapse_whitespace(sql));
  }
}

std::string ReadOnlyGuard::explain(std::string_view sql) {
  check(sql);
  return inner_->explain(sql);
}

std::vector<ResultColumn> ReadOnlyGuard::scan(std::string_view sql, const RowSink& sink) {
  check(sql);
  return inner_->scan(sql, sink);
}

}  // namespace insight::catalog
