#include "insight/chart/chart.hpp"

#include <algorithm>
#include <set>

#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::chart {

namespace {

using nlohmann::json;
using tisql::ColumnKind;
using tisql::QueryResult;

constexpr std::size_t kPieMaxCategories = 8;
constexpr std::size_t kSeriesMaxCategories = 6;
constexpr std::size_t kHistogramMinRows = 20;

std::optional<std::size_t> nth_of_kind(const QueryResult& r, ColumnKind kind, std::size_t n = 0) {
  for (std::size_t i = 0; i < r.columns.size(); ++i)
    if (r.columns[i].kind == kind && n-- == 0) return i;
  return std::nullopt;
}

constexpr ChartType kAllTypes[] = {ChartType::pie,       ChartType::bar,         ChartType::line,
                                   ChartType::scatter,   ChartType::histogram,   ChartType::number_card,
                                   ChartType::table};

}  // namespace

std::string_view to_string(ChartType t) {
  switch (t) {
    case ChartType::pie: return "pie";
    case ChartType::bar: return "bar";
    case ChartType::line: return "line";
    case ChartType::scatter: return "scatter";
    case ChartType::histogram: return "histogram";
    case ChartType::number_card: return "number_card";
    case ChartType::table: return "table";
  }
  return "table";
}

ChartType chart_type_from_string(std::string_view s) {
  for (auto t : kAllTypes)
    if (util::iequals(to_string(t), s)) return t;
  throw Error(ErrorCode::InvalidArgument, "unknown chart type: " + std::string(s));
}

std::string_view to_string(Source s) { return s == Source::rule ? "rule" : "llm_tiebreak"; }

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::R1: return "R1";
    case Rule::R2: return "R2";
    case Rule::R3: return "R3";
    case Rule::R4: return "R4";
    case Rule::R5: return "R5";
    case Rule::R6: return "R6";
  }
  return "R?";
}

ShapeSignature classify_result(const QueryResult& result) {
  if (result.columns.empty()) throw Error(ErrorCode::EmptyResult, "result has no columns");
  ShapeSignature sig;
  for (const auto& c : result.columns) {
    switch (c.kind) {
      case ColumnKind::categorical: ++sig.categorical_cols; break;
      case ColumnKind::numeric: ++sig.numeric_cols; break;
      case ColumnKind::temporal: ++sig.temporal_cols; break;
      case ColumnKind::other: ++sig.other_cols; break;
    }
  }
  sig.row_count = result.rows.size();
  if (auto cat = nth_of_kind(result, ColumnKind::categorical)) {
    std::set<std::string> distinct;
    for (const auto& row : result.rows) distinct.insert(catalog::value_to_text(row[*cat]));
    sig.distinct_category_cardinality = distinct.size();
  }
  return sig;
}

std::vector<Rule> fired_rules(const ShapeSignature& s) {
  std::vector<Rule> out;
  auto card = s.distinct_category_cardinality.value_or(0);
  if (s.row_count == 1 && s.column_count() == 1) out.push_back(Rule::R6);
  if (s.temporal_cols >= 1 && s.numeric_cols >= 1) out.push_back(Rule::R3);
  if (s.categorical_cols == 1 && s.numeric_cols >= 1 && card <= kPieMaxCategories) out.push_back(Rule::R1);
  if (s.categorical_cols == 1 && s.numeric_cols >= 1 && card > kPieMaxCategories) out.push_back(Rule::R2);
  if (s.numeric_cols == 2 && s.categorical_cols == 0 && s.temporal_cols == 0) out.push_back(Rule::R4);
  if (s.numeric_cols == 1 && s.row_count > kHistogramMinRows) out.push_back(Rule::R5);
  return out;
}

bool looks_like_aggregate(std::string_view column_name) {
  auto name = util::to_lower(column_name);
  for (std::string_view needle : {"count", "sum", "total", "cnt"})
    if (name.find(needle) != std::string::npos) return true;
  return false;
}

std::vector<ChartType> rule_charts(Rule rule, const QueryResult& result) {
  switch (rule) {
    case Rule::R1: {
      auto num = nth_of_kind(result, ColumnKind::numeric);
      if (num && looks_like_aggregate(result.columns[*num].name)) return {ChartType::pie, ChartType::bar};
      return {ChartType::bar, ChartType::pie};
    }
    case Rule::R2: return {ChartType::bar};
    case Rule::R3: return {ChartType::line};
    case Rule::R4: return {ChartType::scatter};
    case Rule::R5: return {ChartType::histogram};
    case Rule::R6: return {ChartType::number_card};
  }
  return {};
}

std::map<std::string, std::string> bind_axes(ChartType type, const QueryResult& result) {
  std::map<std::string, std::string> b;
  auto name = [&](std::optional<std::size_t> i) { return result.columns[*i].name; };
  auto cat = nth_of_kind(result, ColumnKind::categorical);
  auto num = nth_of_kind(result, ColumnKind::numeric);
  auto tmp = nth_of_kind(result, ColumnKind::temporal);
  switch (type) {
    case ChartType::pie:
    case ChartType::bar:
      if (cat) b["x"] = name(cat);
      if (num) b["y"] = name(num);
      break;
    case ChartType::line:
      if (tmp) b["x"] = name(tmp);
      if (num) b["y"] = name(num);
      if (cat) {
        std::set<std::string> distinct;
        for (const auto& row : result.rows) distinct.insert(catalog::value_to_text(row[*cat]));
        if (distinct.size() <= kSeriesMaxCategories) b["series"] = name(cat);
      }
      break;
    case ChartType::scatter:
      if (num) b["x"] = name(num);
      if (auto second = nth_of_kind(result, ColumnKind::numeric, 1)) b["y"] = name(second);
      break;
    case ChartType::histogram:
      if (num) b["x"] = name(num);
      break;
    case ChartType::number_card:
      b["value"] = result.columns.front().name;
      break;
    case ChartType::table: break;
  }
  return b;
}

namespace {

std::vector<ChartRecommendation> finish(const std::vector<ChartType>& order, const QueryResult& result,
                                        Source source) {
  std::vector<ChartRecommendation> out;
  for (auto t : order) {
    if (t == ChartType::table) continue;
    if (std::any_of(out.begin(), out.end(), [&](const auto& r) { return r.chart_type == t; })) continue;
    out.push_back({t, bind_axes(t, result), 0, source});
  }
  out.push_back({ChartType::table, {}, 0, Source::rule});
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

std::vector<ChartType> precedence_order(const std::vector<Rule>& rules, const QueryResult& result) {
  std::vector<ChartType> order;
  for (auto r : rules)
    for (auto t : rule_charts(r, result)) order.push_back(t);
  return order;
}

}  // namespace

std::vector<ChartRecommendation> recommend_by_rules(const ShapeSignature& sig, const QueryResult& result) {
  return finish(precedence_order(fired_rules(sig), result), result, Source::rule);
}

std::vector<ChartRecommendation> recommend(const ShapeSignature& sig, const QueryResult& result,
                                           const std::string& task_text, const hdc::LlmContext* llm) {
  auto rules = fired_rules(sig);
  auto order = precedence_order(rules, result);
  if (rules.size() < 2 || !llm) return finish(order, result, Source::rule);

  std::vector<std::string> candidates;
  for (auto t : order) candidates.emplace_back(to_string(t));
  json cols = json::array();
  for (const auto& c : result.columns) cols.push_back({{"name", c.name}, {"kind", tisql::to_string(c.kind)}});
  json input{{"task", task_text}, {"columns", cols}, {"row_count", sig.row_count}, {"candidates", candidates}};
  llm::Shape shape{{{"order", llm::FieldKind::text_list}}};
  auto request = llm->gateway.make_request(
      llm::Purpose::chart_tiebreak, llm->model_id,
      "You choose chart types for query results. Reply with " + shape.describe() + ".",
      "Order the candidate chart types from most to least suitable for the task's intent (for example, a "
      "proportion suggests pie and a trend suggests line). Use only the candidates given.\n\n### Input\n" +
          input.dump(2),
      256);
  try {
    auto reply = llm->gateway.complete_structured(request, shape);
    std::vector<ChartType> reordered;
    for (const auto& s : reply["order"]) {
      ChartType t;
      try {
        t = chart_type_from_string(s.get<std::string>());
      } catch (const Error&) {
        continue;
      }
      // The model may only reorder fired types, never add one.
      if (std::find(order.begin(), order.end(), t) != order.end()) reordered.push_back(t);
    }
    if (reordered.empty()) return finish(order, result, Source::rule);
    for (auto t : order) reordered.push_back(t);  // missing ones keep precedence order; duplicates dropped
    return finish(reordered, result, Source::llm_tiebreak);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MalformedOutput) throw;
    return finish(order, result, Source::rule);
  }
}

json chart_payload(const ChartRecommendation& rec, const QueryResult& result) {
  json j = result;
  return {{"chart_type", to_string(rec.chart_type)},
          {"axis_bindings", rec.axis_bindings},
          {"columns", j["columns"]},
          {"rows", j["rows"]}};
}

void to_json(json& j, const ChartRecommendation& r) {
  j = {{"chart_type", to_string(r.chart_type)},
       {"axis_bindings", r.axis_bindings},
       {"rank", r.rank},
       {"source", to_string(r.source)}};
}

void from_json(const json& j, ChartRecommendation& r) {
  r.chart_type = chart_type_from_string(j.at("chart_type").get<std::string>());
  r.axis_bindings = j.at("axis_bindings").get<std::map<std::string, std::string>>();
  r.rank = j.at("rank").get<std::size_t>();
  r.source = j.at("source").get<std::string>() == "rule" ? Source::rule : Source::llm_tiebreak;
}

void to_json(json& j, const ShapeSignature& s) {
  j = {{"categorical_cols", s.categorical_cols}, {"numeric_cols", s.numeric_cols},
       {"temporal_cols", s.temporal_cols},       {"other_cols", s.other_cols},
       {"row_count", s.row_count}};
  j["distinct_category_cardinality"] =
      s.distinct_category_cardinality ? json(*s.distinct_category_cardinality) : json(nullptr);
}

}  // namespace insight::chart
