#include "insight/tisql/types.hpp"

#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::tisql {

std::string_view to_string(Phase p) { return p == Phase::explain ? "explain" : "execute"; }

std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::temporal: return "temporal";
    case ColumnKind::other: return "other";
  }
  return "other";
}

ColumnKind column_kind_from_string(std::string_view s) {
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "temporal") return ColumnKind::temporal;
  if (s == "other") return ColumnKind::other;
  throw Error(ErrorCode::InvalidArgument, "unknown column kind: " + std::string(s));
}

std::size_t RefinementTrace::rounds_in(Phase p) const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.phase == p;
  return n;
}

ColumnKind infer_column_kind(std::string_view declared_type, const std::vector<catalog::Row>& rows, std::size_t col) {
  auto decl = util::to_lower(declared_type);
  auto has = [&](std::string_view needle) { return decl.find(needle) != std::string::npos; };
  if (has("date") || has("time")) return ColumnKind::temporal;
  if (has("int") || has("real") || has("floa") || has("doub") || has("num") || has("dec") || has("bool"))
    return ColumnKind::numeric;

  bool any = false, all_numeric = true, all_dates = true, any_text = false;
  for (const auto& row : rows) {
    const auto& v = row[col];
    if (std::holds_alternative<std::monostate>(v)) continue;
    any = true;
    if (const auto* s = std::get_if<std::string>(&v)) {
      all_numeric = false;
      any_text = true;
      if (!util::looks_like_date(*s)) all_dates = false;
    } else {
      all_dates = false;
    }
  }
  if (!any) return ColumnKind::other;
  if (all_numeric) return ColumnKind::numeric;
  if (all_dates) return ColumnKind::temporal;
  if (any_text) return ColumnKind::categorical;
  return ColumnKind::other;
}

QueryResult to_query_result(const catalog::RawResult& raw) {
  QueryResult r;
  r.rows = raw.rows;
  r.truncated = raw.truncated;
  for (std::size_t i = 0; i < raw.columns.size(); ++i)
    r.columns.push_back({raw.columns[i].name, infer_column_kind(raw.columns[i].declared_type, raw.rows, i)});
  return r;
}

void to_json(nlohmann::json& j, const SchemaSubset& s) {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : s.condition_values) conds.push_back({{"column", c.column}, {"value", c.value}});
  j = {{"tables", s.tables}, {"columns", s.columns}, {"condition_values", conds}};
}

void from_json(const nlohmann::json& j, SchemaSubset& s) {
  s.tables = j.at("tables").get<std::vector<std::string>>();
  s.columns = j.at("columns").get<std::map<std::string, std::vector<std::string>>>();
  s.condition_values.clear();
  for (const auto& c : j.at("condition_values"))
    s.condition_values.push_back({c.at("column").get<std::string>(), c.at("value").get<std::string>()});
}

void to_json(nlohmann::json& j, const SqlCandidate& c) {
  j = {{"sql", c.sql_text}, {"dialect", c.dialect_id}, {"produced_by_round", c.produced_by_round}};
}

void from_json(const nlohmann::json& j, SqlCandidate& c) {
  c.sql_text = j.at("sql").get<std::string>();
  c.dialect_id = j.at("dialect").get<std::string>();
  c.produced_by_round = j.at("produced_by_round").get<std::size_t>();
}

void to_json(nlohmann::json& j, const RefinementTrace& t) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : t.rounds)
    rounds.push_back({{"phase", to_string(r.phase)},
                      {"input_sql", r.input_sql},
                      {"ok", r.ok},
                      {"feedback", r.feedback},
                      {"output_sql", r.output_sql},
                      {"explain_passed", r.explain_passed}});
  j = {{"rounds", rounds}, {"final", t.final}, {"succeeded", t.succeeded}};
}

void from_json(const nlohmann::json& j, RefinementTrace& t) {
  t.rounds.clear();
  for (const auto& r : j.at("rounds"))
    t.rounds.push_back({r.at("phase").get<std::string>() == "explain" ? Phase::explain : Phase::execute,
                        r.at("input_sql").get<std::string>(), r.at("ok").get<bool>(),
                        r.at("feedback").get<std::string>(), r.at("output_sql").get<std::string>(),
                        r.at("explain_passed").get<bool>()});
  t.final = j.at("final").get<SqlCandidate>();
  t.succeeded = j.at("succeeded").get<bool>();
}

void to_json(nlohmann::json& j, const QueryResult& r) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : r.columns) cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& v : row) jr.push_back(catalog::value_to_json(v));
    rows.push_back(std::move(jr));
  }
  j = {{"columns", cols}, {"rows", rows}, {"truncated", r.truncated}};
}

void from_json(const nlohmann::json& j, QueryResult& r) {
  r.columns.clear();
  r.rows.clear();
  for (const auto& c : j.at("columns"))
    r.columns.push_back({c.at("name").get<std::string>(), column_kind_from_string(c.at("kind").get<std::string>())});
  for (const auto& jr : j.at("rows")) {
    catalog::Row row;
    for (const auto& v : jr) row.push_back(catalog::value_from_json(v));
    r.rows.push_back(std::move(row));
  }
  r.truncated = j.at("truncated").get<bool>();
}

}  // namespace insight::tisql
