#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "insight/catalog/schema.hpp"

namespace insight::catalog {

struct ResultColumn {
  std::string name;
  std::string declared_type;  // empty for computed expressions
};

struct RawResult {
  std::vector<ResultColumn> columns;
  std::vector<Row> rows;
  bool truncated = false;
};

using RowSink = std::function<bool(const Row&)>;  // return false to stop

// Engine adapter. Statement-level problems surface as Error(SqlError) whose
// message is the engine's diagnostic, suitable as LLM feedback. Connection
// problems surface as EngineUnavailable.
class SqlEngine {
 public:
  virtual ~SqlEngine() = default;

  virtual std::string dialect_id() const = 0;
  virtual DatabaseSchema introspect() = 0;

  // Statement validation without execution; returns the plan text.
  virtual std::string explain(std::string_view sql) = 0;

  virtual std::vector<ResultColumn> scan(std::string_view sql, const RowSink& sink) = 0;

  virtual std::string quote_identifier(std::string_view name) const = 0;

  // Fetches at most row_cap rows; truncated is set when more were available.
  RawResult query(std::string_view sql, std::size_t row_cap);
};

struct EngineOptions {
  std::chrono::milliseconds statement_timeout{30'000};
};

// Connection spec: "sqlite:<path>". The database is opened read-only.
std::unique_ptr<SqlEngine> open_engine(std::string_view connection_spec, EngineOptions options = {});

// Counts statements rejected by a ReadOnlyGuard.
class MutationCounter {
 public:
  void record() noexcept { attempts_.fetch_add(1, std::memory_order_relaxed); }
  std::size_t attempts() const noexcept { return attempts_.load(std::memory_order_relaxed); }

  static MutationCounter& global();

 private:
  std::atomic<std::size_t> attempts_{0};
};

// Engine shim that refuses anything but single read-only statements before
// they reach the wrapped engine.
class ReadOnlyGuard final : public SqlEngine {
 public:
  explicit ReadOnlyGuard(std::unique_ptr<SqlEngine> inner,
                         MutationCounter& counter = MutationCounter::global());

  std::string dialect_id() const override { return inner_->dialect_id(); }
  DatabaseSchema introspect() override { return inner_->introspect(); }
  std::string explain(std::string_view sql) override;
  std::vector<ResultColumn> scan(std::string_view sql, const RowSink& sink) override;
  std::string quote_identifier(std::string_view name) const override {
    return inner_->quote_identifier(name);
  }

 private:
  void check(std::string_view sql);

  std::unique_ptr<SqlEngine> inner_;
  MutationCounter& counter_;
};

}  // namespace insight::catalog
