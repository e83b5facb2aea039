#include "insight/catalog/sampling.hpp"

#include <algorithm>
#include <random>

#include "insight/error.hpp"

namespace insight::catalog {

SampledRows sample_rows(SqlEngine& engine, const DatabaseSchema& schema, std::string_view table,
                        std::size_t n, std::uint64_t seed) {
  const TableDef* def = schema.find_table(table);
  if (!def) throw Error(ErrorCode::UnknownTable, "unknown table: " + std::string(table));

  SampledRows out;
  out.table = def->name;
  out.seed = seed;
  for (const auto& c : def->columns) out.columns.push_back(c.name);
  if (n == 0) return out;

  std::string select_list;
  for (std::size_t i = 0; i < def->columns.size(); ++i) {
    if (i) select_list += ", ";
    select_list += engine.quote_identifier(def->columns[i].name);
  }
  const auto& order_cols = def->declared_primary_key.empty() ? out.columns : def->declared_primary_key;
  std::string order_by;
  for (std::size_t i = 0; i < order_cols.size(); ++i) {
    if (i) order_by += ", ";
    order_by += engine.quote_identifier(order_cols[i]);
  }
  std::string sql = "SELECT " + select_list + " FROM " + engine.quote_identifier(def->name) +
                    " ORDER BY " + order_by;

  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::size_t, Row>> reservoir;
  reservoir.reserve(n);
  std::size_t ordinal = 0;
  engine.scan(sql, [&](const Row& row) {
    if (ordinal < n) {
      reservoir.emplace_back(ordinal, row);
    } else {
      auto j = static_cast<std::size_t>(rng() % (ordinal + 1));
      if (j < n) reservoir[j] = {ordinal, row};
    }
    ++ordinal;
    return true;
  });
  std::sort(reservoir.begin(), reservoir.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [_, row] : reservoir) out.rows.push_back(std::move(row));
  return out;
}

}  // namespace insight::catalog
