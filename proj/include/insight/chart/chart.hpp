#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "insight/hdc/generator.hpp"
#include "insight/tisql/types.hpp"

namespace insight::chart {

struct ShapeSignature {
  std::size_t categorical_cols = 0;
  std::size_t numeric_cols = 0;
  std::size_t temporal_cols = 0;
  std::size_t other_cols = 0;
  std::size_t row_count = 0;
  // Distinct values of the first categorical column.
  std::optional<std::size_t> distinct_category_cardinality;

  std::size_t column_count() const { return categorical_cols + numeric_cols + temporal_cols + other_cols; }
  bool operator==(const ShapeSignature&) const = default;
};

enum class ChartType { pie, bar, line, scatter, histogram, number_card, table };
std::string_view to_string(ChartType t);
ChartType chart_type_from_string(std::string_view s);

enum class Source { rule, llm_tiebreak };
std::string_view to_string(Source s);

struct ChartRecommendation {
  ChartType chart_type = ChartType::table;
  std::map<std::string, std::string> axis_bindings;  // role (x, y, series) -> column
  std::size_t rank = 0;
  Source source = Source::rule;

  bool operator==(const ChartRecommendation&) const = default;
};

// Throws EmptyResult for a result with no columns.
ShapeSignature classify_result(const tisql::QueryResult& result);

enum class Rule { R1, R2, R3, R4, R5, R6 };
std::string_view to_string(Rule r);

// Primary rules that fire for `sig`, in precedence order R6 > R3 > R1 > R2 >
// R4 > R5. The table fallback (R7) is implicit.
std::vector<Rule> fired_rules(const ShapeSignature& sig);

// Chart types a rule contributes, in rule order. R1 puts pie first when the
// first numeric column is named like a count or sum aggregate.
std::vector<ChartType> rule_charts(Rule rule, const tisql::QueryResult& result);

// Rule-precedence list ending in table, with bindings and ranks.
std::vector<ChartRecommendation> recommend_by_rules(const ShapeSignature& sig, const tisql::QueryResult& result);

// As recommend_by_rules, but when more than one primary rule fires and
// `llm` is given, one tiebreak call may reorder the fired types. A malformed
// tiebreak reply keeps the precedence order.
std::vector<ChartRecommendation> recommend(const ShapeSignature& sig, const tisql::QueryResult& result,
                                           const std::string& task_text, const hdc::LlmContext* llm);

std::map<std::string, std::string> bind_axes(ChartType type, const tisql::QueryResult& result);

// True for names containing count, sum, total or cnt.
bool looks_like_aggregate(std::string_view column_name);

// {chart_type, axis_bindings, columns:[{name, kind}], rows}
nlohmann::json chart_payload(const ChartRecommendation& rec, const tisql::QueryResult& result);

void to_json(nlohmann::json& j, const ChartRecommendation& r);
void from_json(const nlohmann::json& j, ChartRecommendation& r);
void to_json(nlohmann::json& j, const ShapeSignature& s);

}  // namespace insight::chart
