#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace insight::testing {

std::vector<vindex::RankedHit> exhaustive_top_k(const std::vector<std::pair<std::string, std::vector<double>>>& items,
                                                const std::vector<double>& query, std::size_t k,
                                                const std::optional<std::string>& exclude) {
  double qq = 0;
  for (double x : query) qq += x * x;
  std::vector<vindex::RankedHit> all;
  for (const auto& [id, v] : items) {
    if (exclude && id == *exclude) continue;
    double dot = 0, vv = 0;
    for (std::size_t d = 0; d < v.size(); ++d) dot += v[d] * query[d];
    for (double x : v) vv += x * x;
    all.push_back({id, dot / (std::sqrt(vv) * std::sqrt(qq))});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  for (auto& h : all) h.score = std::clamp(h.score, -1.0, 1.0);
  return all;
}

catalog::DatabaseSchema random_schema(std::mt19937_64& rng, std::size_t max_tables, std::size_t max_columns) {
  std::uniform_int_distribution<std::size_t> tables(1, max_tables), columns(1, max_columns);
  catalog::DatabaseSchema s;
  s.database_name = "random";
  s.dialect_id = "sqlite";
  auto n = tables(rng);
  for (std::size_t t = 0; t < n; ++t) {
    catalog::TableDef def;
    def.name = "t" + std::to_string(t);
    auto m = columns(rng);
    for (std::size_t c = 0; c < m; ++c) def.columns.push_back({"c" + std::to_string(c), "TEXT", {}, true});
    s.tables.push_back(std::move(def));
  }
  return s;
}

std::optional<std::string> partition_problem(const catalog::DatabaseSchema& schema,
                                             const std::vector<hdc::ColumnGroup>& groups, std::size_t max_columns) {
  std::map<std::string, int> seen;
  for (const auto& g : groups) {
    if (g.columns.empty()) return "empty group in " + g.table;
    if (g.columns.size() > max_columns) return "oversized group in " + g.table;
    const auto* t = schema.find_table(g.table);
    if (!t) return "group names unknown table " + g.table;
    for (const auto& c : g.columns) {
      if (!t->has_column(c)) return "group of " + g.table + " holds foreign column " + c;
      if (++seen[g.table + "." + c] > 1) return "column in two groups: " + g.table + "." + c;
    }
  }
  for (const auto& t : schema.tables)
    for (const auto& c : t.columns)
      if (!seen.count(t.name + "." + c.name)) return "uncovered column " + t.name + "." + c.name;
  return std::nullopt;
}

std::vector<std::string> relationship_keys(const std::vector<hdc::TableRelationship>& rels) {
  std::set<std::string> keys;
  for (const auto& r : rels) keys.insert(r.undirected_key());
  return {keys.begin(), keys.end()};
}

tisql::QueryResult make_shaped_result(const Shape& s, const std::string& num_name) {
  tisql::QueryResult r;
  for (std::size_t i = 0; i < s.cat; ++i) r.columns.push_back({"cat" + std::to_string(i), tisql::ColumnKind::categorical});
  for (std::size_t i = 0; i < s.num; ++i)
    r.columns.push_back({i == 0 ? num_name : "num" + std::to_string(i), tisql::ColumnKind::numeric});
  for (std::size_t i = 0; i < s.tmp; ++i) r.columns.push_back({"day" + std::to_string(i), tisql::ColumnKind::temporal});
  for (std::size_t i = 0; i < s.other; ++i) r.columns.push_back({"blob" + std::to_string(i), tisql::ColumnKind::other});
  for (std::size_t row = 0; row < s.rows; ++row) {
    catalog::Row values;
    for (const auto& c : r.columns) {
      switch (c.kind) {
        case tisql::ColumnKind::categorical:
          values.emplace_back(c.name == "cat0" ? "label" + std::to_string(row % std::max<std::size_t>(s.card, 1))
                                               : std::string("x"));
          break;
        case tisql::ColumnKind::numeric: values.emplace_back(static_cast<double>(row) * 1.5); break;
        case tisql::ColumnKind::temporal: values.emplace_back("2024-01-" + std::to_string(10 + row % 18)); break;
        case tisql::ColumnKind::other: values.emplace_back(catalog::Value{}); break;
      }
    }
    r.rows.push_back(std::move(values));
  }
  return r;
}

std::vector<chart::ChartType> expected_types(const Shape& s, bool aggregate_name) {
  std::vector<chart::ChartType> out;
  auto add = [&](chart::ChartType t) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  std::size_t cols = s.cat + s.num + s.tmp + s.other;
  std::size_t card = s.cat > 0 ? std::min(s.card, s.rows) : 0;
  if (s.rows == 1 && cols == 1) add(chart::ChartType::number_card);
  if (s.tmp >= 1 && s.num >= 1) add(chart::ChartType::line);
  if (s.cat == 1 && s.num >= 1 && card <= 8) {
    if (aggregate_name) {
      add(chart::ChartType::pie);
      add(chart::ChartType::bar);
    } else {
      add(chart::ChartType::bar);
      add(chart::ChartType::pie);
    }
  }
  if (s.cat == 1 && s.num >= 1 && card > 8) add(chart::ChartType::bar);
  if (s.num == 2 && s.cat == 0 && s.tmp == 0) add(chart::ChartType::scatter);
  if (s.num == 1 && s.rows > 20) add(chart::ChartType::histogram);
  return out;
}

std::vector<Shape> all_shapes() {
  std::vector<Shape> out;
  for (std::size_t cat : {0, 1, 2})
    for (std::size_t num : {0, 1, 2, 3})
      for (std::size_t tmp : {0, 1, 2})
        for (std::size_t other : {0, 1})
          for (std::size_t rows : {0, 1, 5, 20, 21, 40})
            for (std::size_t card : {1, 5, 8, 9, 30}) {
              if (cat + num + tmp + other == 0) continue;
              if (cat == 0 && card != 1) continue;
              out.push_back({cat, num, tmp, other, rows, card});
            }
  return out;
}

}  // namespace insight::testing
