#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "insight/catalog/engine.hpp"
#include "insight/catalog/schema.hpp"

namespace insight::tisql {

struct ConditionValue {
  std::string column;  // table.column
  std::string value;

  bool operator==(const ConditionValue&) const = default;
};

struct SchemaSubset {
  std::vector<std::string> tables;
  std::map<std::string, std::vector<std::string>> columns;  // table -> columns
  std::vector<ConditionValue> condition_values;

  bool empty() const { return tables.empty(); }
  bool operator==(const SchemaSubset&) const = default;
};

struct SqlCandidate {
  std::string sql_text;
  std::string dialect_id;
  std::size_t produced_by_round = 0;  // 0 = initial generation

  bool operator==(const SqlCandidate&) const = default;
};

enum class Phase { explain, execute };
std::string_view to_string(Phase p);

struct RefinementRound {
  Phase phase = Phase::explain;
  std::string input_sql;
  bool ok = false;
  std::string feedback;  // engine diagnostic when !ok
  std::string output_sql;
  // input_sql passed EXPLAIN in this round; execute rounds never run a
  // statement without it.
  bool explain_passed = false;

  bool operator==(const RefinementRound&) const = default;
};

struct RefinementTrace {
  std::vector<RefinementRound> rounds;
  SqlCandidate final;
  bool succeeded = false;

  std::size_t rounds_in(Phase p) const;
  bool operator==(const RefinementTrace&) const = default;
};

enum class ColumnKind { categorical, numeric, temporal, other };
std::string_view to_string(ColumnKind k);
ColumnKind column_kind_from_string(std::string_view s);

struct ResultColumnInfo {
  std::string name;
  ColumnKind kind = ColumnKind::other;

  bool operator==(const ResultColumnInfo&) const = default;
};

struct QueryResult {
  std::vector<ResultColumnInfo> columns;
  std::vector<catalog::Row> rows;
  bool truncated = false;

  bool operator==(const QueryResult&) const = default;
};

// Column kinds, first match wins:
//   1. declared type mentions DATE or TIME             -> temporal
//   2. declared type has numeric affinity              -> numeric
//   3. non-null values all integers/reals              -> numeric
//   4. non-null values all date-shaped text            -> temporal
//   5. any text value                                  -> categorical
//   6. otherwise (no non-null values)                  -> other
ColumnKind infer_column_kind(std::string_view declared_type, const std::vector<catalog::Row>& rows, std::size_t col);
QueryResult to_query_result(const catalog::RawResult& raw);

void to_json(nlohmann::json& j, const SchemaSubset& s);
void from_json(const nlohmann::json& j, SchemaSubset& s);
void to_json(nlohmann::json& j, const SqlCandidate& c);
void from_json(const nlohmann::json& j, SqlCandidate& c);
void to_json(nlohmann::json& j, const RefinementTrace& t);
void from_json(const nlohmann::json& j, RefinementTrace& t);
void to_json(nlohmann::json& j, const QueryResult& r);
void from_json(const nlohmann::json& j, QueryResult& r);

}  // namespace insight::tisql
