#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace insight::catalog {

// A single SQL value as returned by an engine.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

std::string value_to_text(const Value& v);
nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

using Row = std::vector<Value>;

struct ColumnDef {
  std::string name;
  std::string sql_type;
  std::optional<std::string> comment;
  bool nullable = true;

  bool operator==(const ColumnDef&) const = default;
};

struct ForeignKey {
  std::string column;
  std::string ref_table;
  std::string ref_column;

  bool operator==(const ForeignKey&) const = default;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  std::vector<std::string> declared_primary_key;
  std::vector<ForeignKey> foreign_keys;
  std::int64_t row_count_estimate = 0;

  const ColumnDef* find_column(std::string_view column) const;
  bool has_column(std::string_view column) const { return find_column(column) != nullptr; }

  bool operator==(const TableDef&) const = default;
};

struct DatabaseSchema {
  std::string database_name;
  std::vector<TableDef> tables;
  std::string dialect_id;

  const TableDef* find_table(std::string_view table) const;
  std::size_t column_count() const;

  // Throws InvalidArgument when table or column names collide, a declared key
  // names a missing column, or a foreign key targets a missing table.
  void validate() const;

  bool operator==(const DatabaseSchema&) const = default;
};

struct SampledRows {
  std::string table;
  std::vector<std::string> columns;
  std::vector<Row> rows;
  std::uint64_t seed = 0;

  bool operator==(const SampledRows&) const = default;
};

void to_json(nlohmann::json& j, const ColumnDef& c);
void from_json(const nlohmann::json& j, ColumnDef& c);
void to_json(nlohmann::json& j, const ForeignKey& f);
void from_json(const nlohmann::json& j, ForeignKey& f);
void to_json(nlohmann::json& j, const TableDef& t);
void from_json(const nlohmann::json& j, TableDef& t);
void to_json(nlohmann::json& j, const DatabaseSchema& s);
void from_json(const nlohmann::json& j, DatabaseSchema& s);

}  // namespace insight::catalog
