#include "insight/catalog/schema.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::catalog {

std::string value_to_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "NULL";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream os;
          os << std::setprecision(15) << x;
          return os.str();
        } else {
          return x;
        }
      },
      v);
}

nlohmann::json value_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(x)) return nullptr;
          return x;
        } else {
          return x;
        }
      },
      v);
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return static_cast<std::int64_t>(j.get<bool>());
  return j.dump();
}

const ColumnDef* TableDef::find_column(std::string_view column) const {
  for (const auto& c : columns)
    if (util::iequals(c.name, column)) return &c;
  return nullptr;
}

const TableDef* DatabaseSchema::find_table(std::string_view table) const {
  for (const auto& t : tables)
    if (util::iequals(t.name, table)) return &t;
  return nullptr;
}

std::size_t DatabaseSchema::column_count() const {
  std::size_t n = 0;
  for (const auto& t : tables) n += t.columns.size();
  return n;
}

void DatabaseSchema::validate() const {
  std::set<std::string> names;
  for (const auto& t : tables) {
    if (!names.insert(util::to_lower(t.name)).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate table name: " + t.name);
    std::set<std::string> cols;
    for (const auto& c : t.columns) {
      if (c.name.empty()) throw Error(ErrorCode::InvalidArgument, "empty column name in " + t.name);
      if (!cols.insert(util::to_lower(c.name)).second)
        throw Error(ErrorCode::InvalidArgument, "duplicate column " + t.name + "." + c.name);
    }
    for (const auto& k : t.declared_primary_key)
      if (!t.has_column(k))
        throw Error(ErrorCode::InvalidArgument, "primary key column missing: " + t.name + "." + k);
  }
  for (const auto& t : tables)
    for (const auto& fk : t.foreign_keys)
      if (!find_table(fk.ref_table))
        throw Error(ErrorCode::InvalidArgument,
                    "foreign key " + t.name + "." + fk.column + " targets unknown table " + fk.ref_table);
}

void to_json(nlohmann::json& j, const ColumnDef& c) {
  j = {{"name", c.name}, {"sql_type", c.sql_type}, {"nullable", c.nullable}};
  j["comment"] = c.comment ? nlohmann::json(*c.comment) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ColumnDef& c) {
  c.name = j.at("name").get<std::string>();
  c.sql_type = j.at("sql_type").get<std::string>();
  c.nullable = j.value("nullable", true);
  if (j.contains("comment") && !j["comment"].is_null())
    c.comment = j["comment"].get<std::string>();
  else
    c.comment.reset();
}

void to_json(nlohmann::json& j, const ForeignKey& f) {
  j = {{"column", f.column}, {"ref_table", f.ref_table}, {"ref_column", f.ref_column}};
}

void from_json(const nlohmann::json& j, ForeignKey& f) {
  f.column = j.at("column").get<std::string>();
  f.ref_table = j.at("ref_table").get<std::string>();
  f.ref_column = j.at("ref_column").get<std::string>();
}

void to_json(nlohmann::json& j, const TableDef& t) {
  j = {{"name", t.name},
       {"columns", t.columns},
       {"declared_primary_key", t.declared_primary_key},
       {"foreign_keys", t.foreign_keys},
       {"row_count_estimate", t.row_count_estimate}};
}

void from_json(const nlohmann::json& j, TableDef& t) {
  t.name = j.at("name").get<std::string>();
  t.columns = j.at("columns").get<std::vector<ColumnDef>>();
  t.declared_primary_key = j.value("declared_primary_key", std::vector<std::string>{});
  t.foreign_keys = j.value("foreign_keys", std::vector<ForeignKey>{});
  t.row_count_estimate = j.value("row_count_estimate", std::int64_t{0});
}

void to_json(nlohmann::json& j, const DatabaseSchema& s) {
  j = {{"name", s.database_name}, {"dialect", s.dialect_id}, {"tables", s.tables}};
}

void from_json(const nlohmann::json& j, DatabaseSchema& s) {
  s.database_name = j.at("name").get<std::string>();
  s.dialect_id = j.at("dialect").get<std::string>();
  s.tables = j.at("tables").get<std::vector<TableDef>>();
}

}  // namespace insight::catalog
