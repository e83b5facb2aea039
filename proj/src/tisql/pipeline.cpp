#include "insight/tisql/pipeline.hpp"

#include <algorithm>
#include <set>

#include "insight/catalog/sql_text.hpp"
#include "insight/util/text.hpp"
#include "insight/util/worker_pool.hpp"

namespace insight::tisql {

namespace {

using llm::FieldKind;
using nlohmann::json;

const catalog::TableDef* resolve_table(const catalog::DatabaseSchema& schema, const std::string& name) {
  if (const auto* t = schema.find_table(name)) return t;
  for (const auto& t : schema.tables)
    if (util::iequals(t.name, name)) return &t;
  return nullptr;
}

const catalog::ColumnDef* resolve_column(const catalog::TableDef& table, const std::string& name) {
  if (const auto* c = table.find_column(name)) return c;
  for (const auto& c : table.columns)
    if (util::iequals(c.name, name)) return &c;
  return nullptr;
}

json table_block(const hdc::HierarchicalDataContext& hdc, const catalog::TableDef& table,
                 const std::vector<std::string>* only_columns = nullptr) {
  json cols = json::array();
  for (const auto& c : table.columns) {
    if (only_columns && std::find(only_columns->begin(), only_columns->end(), c.name) == only_columns->end())
      continue;
    json jc{{"name", c.name}, {"type", c.sql_type}};
    if (const auto* s = hdc.summary_of(table.name, c.name)) jc["summary"] = s->description;
    cols.push_back(std::move(jc));
  }
  json block{{"name", table.name}, {"columns", cols}};
  if (const auto* d = hdc.description_of(table.name)) {
    block["entity"] = d->entity;
    block["description"] = d->narrative;
  }
  return block;
}

std::string strip_sql_reply(std::string_view reply) {
  auto sql = util::trim(util::strip_code_fences(reply));
  while (!sql.empty() && (sql.back() == ';' || std::isspace(static_cast<unsigned char>(sql.back())))) sql.pop_back();
  return sql;
}

constexpr std::string_view kRejectedNotice =
    "statement rejected before reaching the engine: only a single read-only SELECT or WITH query is allowed";

RefinementRound start_round(Phase phase, const std::string& sql) {
  RefinementRound r;
  r.phase = phase;
  r.input_sql = sql;
  return r;
}

bool statement_problem(const Error& e) {
  return e.code() == ErrorCode::SqlError || e.code() == ErrorCode::Timeout;
}

// nullopt when the statement passes EXPLAIN.
std::optional<std::string> try_explain(catalog::SqlEngine& engine, const std::string& sql) {
  if (!catalog::is_read_only_statement(sql)) return std::string(kRejectedNotice);
  try {
    engine.explain(sql);
    return std::nullopt;
  } catch (const Error& e) {
    if (!statement_problem(e)) throw;
    return std::string(e.what());
  }
}

}  // namespace

std::vector<vindex::RankedHit> coarse_select_tables(const std::string& task_text, const hdc::HdcIndex& index,
                                                    const hdc::PipelineConfig& cfg, llm::Gateway& gateway) {
  if (!index.tables || index.tables->size() == 0) throw Error(ErrorCode::EmptyIndex, "no table vectors indexed");
  return index.tables->top_k(gateway.embed(task_text), cfg.coarse_table_top_n);
}

std::vector<std::string> expand_with_neighbors(const std::vector<std::string>& ranked,
                                               const hdc::HierarchicalDataContext& hdc) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& t) {
    if (seen.insert(t).second) out.push_back(t);
  };
  for (const auto& t : ranked) add(t);
  for (const auto& t : ranked)
    for (const auto& r : hdc.relationships) {
      if (r.from_table == t) add(r.to_table);
      if (r.to_table == t) add(r.from_table);
    }
  return out;
}

std::vector<std::vector<std::string>> group_tables(const std::vector<std::string>& candidates,
                                                   const hdc::HierarchicalDataContext& hdc,
                                                   std::size_t budget_tokens) {
  std::vector<std::vector<std::string>> groups;
  std::size_t used = 0;
  for (const auto& name : candidates) {
    const auto* table = hdc.schema.find_table(name);
    if (!table) continue;
    auto cost = llm::estimate_tokens(table_block(hdc, *table).dump());
    if (groups.empty() || used + cost > budget_tokens) {
      groups.push_back({name});
      used = cost;
    } else {
      groups.back().push_back(name);
      used += cost;
    }
  }
  return groups;
}

llm::Shape filter_shape() {
  return llm::Shape{{{"tables", FieldKind::list}, {"condition_values", FieldKind::list, false}}};
}

llm::LlmRequest filter_request(const std::string& task_text, const std::vector<std::string>& group,
                               const hdc::HierarchicalDataContext& hdc, const hdc::LlmContext& llm) {
  json tables = json::array();
  for (const auto& name : group)
    if (const auto* t = hdc.schema.find_table(name)) tables.push_back(table_block(hdc, *t));
  json input{{"task", task_text}, {"tables", tables}};
  auto shape = filter_shape();
  return llm.gateway.make_request(
      llm::Purpose::schema_filter, llm.model_id,
      "You link analysis tasks to database schemas. Think step by step about which tables and columns a SQL "
      "query for the task must read, then reply with " +
          shape.describe() +
          ". Each \"tables\" entry is {\"name\": string, \"columns\": [string]}; each \"condition_values\" entry is "
          "{\"column\": \"table.column\", \"value\": string}.",
      "Select only tables and columns from the input that the task needs, including join keys. List literal "
      "values the task implies for filter conditions. Return an empty tables list if none apply.\n\n### Input\n" +
          input.dump(2));
}

SchemaSubset merge_filter_outputs(const std::vector<json>& replies, const catalog::DatabaseSchema& schema) {
  SchemaSubset subset;
  std::set<std::pair<std::string, std::string>> conds_seen;
  for (const auto& reply : replies) {
    for (const auto& jt : reply.value("tables", json::array())) {
      if (!jt.is_object() || !jt.contains("name") || !jt["name"].is_string()) continue;
      const auto* table = resolve_table(schema, jt["name"].get<std::string>());
      if (!table) continue;
      auto [it, fresh] = subset.columns.try_emplace(table->name);
      if (fresh) subset.tables.push_back(table->name);
      auto& cols = it->second;
      for (const auto& jc : jt.value("columns", json::array())) {
        if (!jc.is_string()) continue;
        const auto* col = resolve_column(*table, jc.get<std::string>());
        if (col && std::find(cols.begin(), cols.end(), col->name) == cols.end()) cols.push_back(col->name);
      }
    }
    for (const auto& jcv : reply.value("condition_values", json::array())) {
      if (!jcv.is_object() || !jcv.contains("column") || !jcv.contains("value")) continue;
      if (!jcv["column"].is_string()) continue;
      auto ref = jcv["column"].get<std::string>();
      auto value = jcv["value"].is_string() ? jcv["value"].get<std::string>() : jcv["value"].dump();
      auto dot = ref.find('.');
      if (dot == std::string::npos) continue;
      const auto* table = resolve_table(schema, ref.substr(0, dot));
      const auto* col = table ? resolve_column(*table, ref.substr(dot + 1)) : nullptr;
      if (!col) continue;
      auto canonical = table->name + "." + col->name;
      if (conds_seen.emplace(canonical, value).second) subset.condition_values.push_back({canonical, value});
    }
  }
  // Hints only make sense for tables that made the cut.
  std::erase_if(subset.condition_values, [&](const ConditionValue& c) {
    return !subset.columns.count(c.column.substr(0, c.column.find('.')));
  });
  return subset;
}

SchemaSubset fine_filter(const std::string& task_text, const std::vector<std::string>& candidates,
                         const hdc::HierarchicalDataContext& hdc, const hdc::PipelineConfig& cfg,
                         const hdc::LlmContext& llm) {
  if (candidates.empty()) throw Error(ErrorCode::PreconditionViolated, "no candidate tables");
  auto groups = group_tables(candidates, hdc, cfg.schema_filter_group_tokens);
  auto shape = filter_shape();
  auto workers = std::min(cfg.worker_pool_size, llm.gateway.config().max_in_flight);
  auto replies = util::parallel_map(workers, groups.size(), [&](std::size_t i) {
    return llm.gateway.complete_structured(filter_request(task_text, groups[i], hdc, llm), shape);
  });
  auto subset = merge_filter_outputs(replies, hdc.schema);
  if (subset.empty())
    throw Error(ErrorCode::NoRelevantSchema,
                "no table in this database matches the task; try naming the data you want explicitly");
  return subset;
}

std::string normalize_sql_reply(std::string_view reply) {
  auto sql = strip_sql_reply(reply);
  auto statements = catalog::split_statements(sql);
  if (statements.empty()) throw Error(ErrorCode::MalformedOutput, "model returned no SQL");
  if (statements.size() > 1) throw Error(ErrorCode::MalformedOutput, "model returned several statements");
  if (!catalog::is_read_only_statement(sql)) throw Error(ErrorCode::NonReadOnly, "rejected non-query statement: " + sql);
  return sql;
}

llm::LlmRequest generation_request(const std::string& task_text, const SchemaSubset& subset,
                                   const hdc::HierarchicalDataContext& hdc, const std::string& dialect,
                                   const hdc::LlmContext& llm) {
  json tables = json::array();
  for (const auto& name : subset.tables) {
    const auto* t = hdc.schema.find_table(name);
    if (!t) continue;
    auto block = table_block(hdc, *t, &subset.columns.at(name));
    if (const auto* d = hdc.description_of(name)) block["primary_key"] = d->primary_key;
    tables.push_back(std::move(block));
  }
  json joins = json::array();
  auto in_subset = [&](const std::string& t) { return subset.columns.count(t) > 0; };
  for (const auto& r : hdc.relationships)
    if (in_subset(r.from_table) && in_subset(r.to_table))
      joins.push_back(r.from_table + "." + r.from_column + " = " + r.to_table + "." + r.to_column);
  json hints = json::array();
  for (const auto& c : subset.condition_values) hints.push_back({{"column", c.column}, {"value", c.value}});
  json input{{"dialect", dialect}, {"task", task_text}, {"tables", tables}, {"joins", joins}, {"condition_values", hints}};
  return llm.gateway.make_request(
      llm::Purpose::sql_gen, llm.model_id,
      "You write one read-only SQL query in the given dialect. Use only the listed tables and columns. Reply with "
      "the SQL statement only.",
      "Write a single SELECT (or WITH) query answering the task. Use the joins listed and treat condition values "
      "as hints about literals, quoting them correctly for the dialect.\n\n### Input\n" +
          input.dump(2));
}

SqlCandidate generate_sql(const std::string& task_text, const SchemaSubset& subset,
                          const hdc::HierarchicalDataContext& hdc, const std::string& dialect,
                          const hdc::LlmContext& llm) {
  if (subset.empty()) throw Error(ErrorCode::PreconditionViolated, "empty schema subset");
  auto ex = llm.gateway.complete(generation_request(task_text, subset, hdc, dialect, llm));
  return SqlCandidate{normalize_sql_reply(ex.response_text.value_or("")), dialect, 0};
}

llm::LlmRequest refine_request(const std::string& task_text, const std::string& sql, const std::string& error,
                               Phase phase, const SchemaSubset& subset, const hdc::HierarchicalDataContext& hdc,
                               const hdc::LlmContext& llm) {
  json tables = json::array();
  auto add = [&](const catalog::TableDef& t) {
    json cols = json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"type", c.sql_type}});
    tables.push_back({{"name", t.name}, {"columns", cols}});
  };
  if (subset.empty()) {
    for (const auto& t : hdc.schema.tables) add(t);
  } else {
    for (const auto& name : subset.tables)
      if (const auto* t = hdc.schema.find_table(name)) add(*t);
  }
  json input{{"task", task_text}, {"phase", to_string(phase)}, {"sql", sql}, {"error", error}, {"tables", tables}};
  return llm.gateway.make_request(
      llm::Purpose::refine, llm.model_id,
      "You repair SQL queries using database error messages. Reply with the corrected SQL statement only.",
      "The statement below failed during " + std::string(to_string(phase)) +
          ". Fix it using the error message and the table definitions. Keep it a single read-only query that "
          "still answers the task.\n\n### Input\n" +
          input.dump(2));
}

RefinementError::RefinementError(RefinementTrace trace, const std::string& last_error)
    : Error(ErrorCode::RefinementExhausted, "refinement rounds exhausted: " + last_error), trace_(std::move(trace)) {}

ChainResult run_refinement_chain(const SqlCandidate& candidate, catalog::SqlEngine& engine,
                                 const hdc::PipelineConfig& cfg, const hdc::LlmContext& llm,
                                 const RefineContext& ctx, const StageHook& on_stage) {
  static const SchemaSubset kNoSubset;
  static const hdc::HierarchicalDataContext kNoHdc;
  const auto& subset = ctx.subset ? *ctx.subset : kNoSubset;
  const auto& hdc = ctx.hdc ? *ctx.hdc : kNoHdc;
  const auto max_rounds = cfg.refine_max_rounds;

  RefinementTrace trace;
  std::string sql = candidate.sql_text;
  std::size_t produced = candidate.produced_by_round;
  std::string last_error;

  auto correct = [&](Phase phase, const std::string& feedback) {
    auto ex = llm.gateway.complete(refine_request(ctx.task_text, sql, feedback, phase, subset, hdc, llm));
    sql = strip_sql_reply(ex.response_text.value_or(""));
    produced = trace.rounds.size() + 1;
  };
  auto fail = [&]() -> RefinementError {
    trace.final = SqlCandidate{sql, candidate.dialect_id, produced};
    trace.succeeded = false;
    return RefinementError(trace, last_error);
  };

  if (on_stage) on_stage("refine");
  bool explained = false;
  for (std::size_t round = 1; round <= max_rounds && !explained; ++round) {
    auto r = start_round(Phase::explain, sql);
    if (auto err = try_explain(engine, sql)) {
      r.feedback = last_error = *err;
      if (round < max_rounds) correct(Phase::explain, *err);
    } else {
      r.ok = r.explain_passed = explained = true;
    }
    r.output_sql = sql;
    trace.rounds.push_back(std::move(r));
  }
  if (!explained) throw fail();

  if (on_stage) on_stage("execute");
  for (std::size_t round = 1; round <= max_rounds; ++round) {
    auto r = start_round(Phase::execute, sql);
    // The first execute round runs the statement the explain phase accepted.
    if (round > 1) {
      if (auto err = try_explain(engine, sql)) {
        r.feedback = last_error = "EXPLAIN failed: " + *err;
        if (round < max_rounds) correct(Phase::execute, r.feedback);
        r.output_sql = sql;
        trace.rounds.push_back(std::move(r));
        continue;
      }
    }
    r.explain_passed = true;
    try {
      auto raw = engine.query(sql, cfg.row_cap);
      r.ok = true;
      r.output_sql = sql;
      trace.rounds.push_back(std::move(r));
      trace.final = SqlCandidate{sql, candidate.dialect_id, produced};
      trace.succeeded = true;
      return ChainResult{to_query_result(raw), std::move(trace)};
    } catch (const Error& e) {
      if (!statement_problem(e)) throw;
      r.feedback = last_error = e.what();
      if (round < max_rounds) correct(Phase::execute, r.feedback);
      r.output_sql = sql;
      trace.rounds.push_back(std::move(r));
    }
  }
  throw fail();
}

void to_json(nlohmann::json& j, const TaskAnswer& a) {
  j = {{"sub_task", a.sub_task}};
  j["subset"] = a.subset ? json(*a.subset) : json(nullptr);
  j["sql"] = a.sql ? json(*a.sql) : json(nullptr);
  j["result"] = a.result ? json(*a.result) : json(nullptr);
  j["trace"] = a.trace ? json(*a.trace) : json(nullptr);
  j["error"] = a.error ? json{{"code", to_string(a.error->code)}, {"message", a.error->message}} : json(nullptr);
}

void from_json(const nlohmann::json& j, TaskAnswer& a) {
  a = TaskAnswer{};
  a.sub_task = j.at("sub_task").get<std::string>();
  if (!j.at("subset").is_null()) a.subset = j["subset"].get<SchemaSubset>();
  if (!j.at("sql").is_null()) a.sql = j["sql"].get<SqlCandidate>();
  if (!j.at("result").is_null()) a.result = j["result"].get<QueryResult>();
  if (!j.at("trace").is_null()) a.trace = j["trace"].get<RefinementTrace>();
  if (!j.at("error").is_null())
    a.error = TaskError{error_code_from_string(j["error"].at("code").get<std::string>()),
                        j["error"].at("message").get<std::string>()};
}

TaskAnswer answer_one(const std::string& task_text, const hdc::HierarchicalDataContext& hdc,
                      const hdc::HdcIndex& index, catalog::SqlEngine& engine, const hdc::PipelineConfig& cfg,
                      const hdc::LlmContext& llm, const StageHook& on_stage) {
  TaskAnswer a;
  a.sub_task = task_text;
  try {
    if (on_stage) on_stage("sql");
    std::vector<std::string> candidates;
    for (const auto& hit : coarse_select_tables(task_text, index, cfg, llm.gateway)) candidates.push_back(hit.id);
    if (cfg.expand_with_neighbors) candidates = expand_with_neighbors(candidates, hdc);
    a.subset = fine_filter(task_text, candidates, hdc, cfg, llm);
    a.sql = generate_sql(task_text, *a.subset, hdc, engine.dialect_id(), llm);
    auto chain = run_refinement_chain(*a.sql, engine, cfg, llm, RefineContext{task_text, &*a.subset, &hdc}, on_stage);
    a.result = std::move(chain.result);
    a.trace = std::move(chain.trace);
  } catch (const RefinementError& e) {
    a.trace = e.trace();
    a.error = TaskError{e.code(), e.what()};
  } catch (const Error& e) {
    a.error = TaskError{e.code(), e.what()};
  } catch (const std::exception& e) {
    a.error = TaskError{ErrorCode::InvalidArgument, e.what()};
  }
  return a;
}

std::vector<TaskAnswer> answer_task(const question::ClarifiedTask& task, const hdc::HierarchicalDataContext& hdc,
                                    const hdc::HdcIndex& index, catalog::SqlEngine& engine,
                                    const hdc::PipelineConfig& cfg, const hdc::LlmContext& llm,
                                    const StageHook& on_stage) {
  auto items = task.work_items();
  std::vector<TaskAnswer> answers(items.size());
  auto workers = std::min(cfg.worker_pool_size, llm.gateway.config().max_in_flight);
  auto errors = util::run_indexed(workers, items.size(), [&](std::size_t i) {
    answers[i] = answer_one(items[i], hdc, index, engine, cfg, llm, on_stage);
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (errors[i]) {
      answers[i].sub_task = items[i];
      answers[i].error = TaskError{ErrorCode::InvalidArgument, "sub-task aborted"};
    }
  return answers;
}

}  // namespace insight::tisql
