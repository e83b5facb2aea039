#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "insight/catalog/schema.hpp"
#include "insight/chart/chart.hpp"
#include "insight/hdc/model.hpp"
#include "insight/vindex/index.hpp"

namespace insight::testing {

// Scores every vector with a textbook cosine and sorts by (score desc, id asc).
std::vector<vindex::RankedHit> exhaustive_top_k(const std::vector<std::pair<std::string, std::vector<double>>>& items,
                                                const std::vector<double>& query, std::size_t k,
                                                const std::optional<std::string>& exclude = std::nullopt);

// Random schema with 1..max_tables tables of 1..max_columns columns.
catalog::DatabaseSchema random_schema(std::mt19937_64& rng, std::size_t max_tables, std::size_t max_columns);

// Problem description, or nullopt when the groups are disjoint, cover every
// column, stay within one table and hold at most max_columns columns.
std::optional<std::string> partition_problem(const catalog::DatabaseSchema& schema,
                                             const std::vector<hdc::ColumnGroup>& groups, std::size_t max_columns);

// Direction-free keys of a relationship list, sorted.
std::vector<std::string> relationship_keys(const std::vector<hdc::TableRelationship>& rels);

// One signature class for the chart rule table.
struct Shape {
  std::size_t cat, num, tmp, other, rows, card;
};

// Result with the requested column kinds; the first categorical column cycles
// through `card` distinct labels and the first numeric column is `num_name`.
tisql::QueryResult make_shaped_result(const Shape& s, const std::string& num_name = "amount");

// Chart types the rule table grants a shape, in precedence order, before the
// table fallback. `aggregate_name` marks a count/sum-like numeric column.
std::vector<chart::ChartType> expected_types(const Shape& s, bool aggregate_name);

// Every combination of 0-2 categorical, 0-3 numeric, 0-2 temporal, 0-1 other
// columns over a spread of row counts and cardinalities.
std::vector<Shape> all_shapes();

}  // namespace insight::testing
