#include "insight/hdc/generator.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "insight/catalog/sampling.hpp"
#include "insight/util/text.hpp"
#include "insight/util/worker_pool.hpp"

namespace insight::hdc {

namespace {

using llm::FieldKind;
using llm::Purpose;
using nlohmann::json;

constexpr const char* kInputMarker = "### Input\n";

std::string with_input(std::string instructions, const json& input) {
  return instructions + "\n\n" + kInputMarker + input.dump(2);
}

std::string system_prompt(const std::string& role, const llm::Shape& shape) {
  return "You are a senior data analyst documenting a relational database. " + role +
         " Think step by step about the evidence before answering, then reply with " + shape.describe() +
         ". Do not wrap the JSON in prose.";
}

const catalog::TableDef& table_or_throw(const catalog::DatabaseSchema& schema, std::string_view name) {
  const auto* t = schema.find_table(name);
  if (!t) throw Error(ErrorCode::UnknownTable, "unknown table: " + std::string(name));
  return *t;
}

std::string value_kind(const catalog::Value& v) {
  if (std::holds_alternative<std::int64_t>(v)) return "integer";
  if (std::holds_alternative<double>(v)) return "numeric";
  if (const auto* s = std::get_if<std::string>(&v)) return util::looks_like_date(*s) ? "date/time" : "text";
  return "null";
}

std::string_view canonical_column(const catalog::TableDef& t, std::string_view name) {
  const auto* c = t.find_column(name);
  return c ? std::string_view(c->name) : std::string_view{};
}

template <class Fn>
auto run_stage(const std::string& stage, std::size_t workers, std::size_t count, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using T = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<std::optional<T>> slots(count);
  auto errors = util::run_indexed(workers, count, [&](std::size_t i) { slots[i].emplace(fn(i)); });
  std::size_t done = 0;
  for (const auto& s : slots) done += s.has_value();
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      throw HdcGenerationError(stage, done, count, err.code(), err.what());
    } catch (const std::exception& err) {
      throw HdcGenerationError(stage, done, count, ErrorCode::InvalidArgument, err.what());
    }
  }
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

template <class Fn>
auto guard_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const HdcGenerationError&) {
    throw;
  } catch (const Error& err) {
    throw HdcGenerationError(stage, 0, 1, err.code(), err.what());
  }
}

std::vector<std::string> dedup_ci(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : in) {
    auto t = util::trim(s);
    if (t.empty()) continue;
    if (seen.insert(util::to_lower(t)).second) out.push_back(t);
  }
  return out;
}

}  // namespace

void HdcIndex::upsert_table(vindex::IndexEntry entry) {
  if (!tables) tables = std::make_unique<vindex::VectorIndex>(entry.vector.dimension());
  tables->upsert(std::move(entry));
}

void HdcIndex::upsert_entity(vindex::IndexEntry entry) {
  if (!entities) entities = std::make_unique<vindex::VectorIndex>(entry.vector.dimension());
  entities->upsert(std::move(entry));
}

HdcGenerationError::HdcGenerationError(std::string stage, std::size_t completed, std::size_t total, ErrorCode cause,
                                       const std::string& cause_message)
    : Error(ErrorCode::HdcGenerationFailed, "HDC generation failed in stage " + stage + " (" +
                                                std::to_string(completed) + "/" + std::to_string(total) +
                                                " units done): " + std::string(to_string(cause)) + ": " +
                                                cause_message),
      stage_(std::move(stage)),
      completed_(completed),
      total_(total),
      cause_(cause) {}

// ---------------------------------------------------------------- partition

std::vector<ColumnGroup> partition_columns(const catalog::DatabaseSchema& schema, const PipelineConfig& cfg) {
  cfg.validate();
  if (schema.column_count() == 0) throw Error(ErrorCode::EmptySchema, "schema has no columns");
  std::vector<ColumnGroup> groups;
  for (const auto& t : schema.tables) {
    for (std::size_t i = 0; i < t.columns.size(); i += cfg.group_max_columns) {
      ColumnGroup g{t.name, {}};
      for (std::size_t j = i; j < std::min(t.columns.size(), i + cfg.group_max_columns); ++j)
        g.columns.push_back(t.columns[j].name);
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

// ----------------------------------------------------------- column summary

std::string value_type_note(const catalog::SampledRows& samples, std::string_view column) {
  auto it = std::find_if(samples.columns.begin(), samples.columns.end(),
                         [&](const std::string& c) { return util::iequals(c, column); });
  if (it == samples.columns.end() || samples.rows.empty()) return "No sampled values.";
  auto idx = static_cast<std::size_t>(it - samples.columns.begin());

  std::vector<std::string> shown;
  std::set<std::string> kinds;
  for (const auto& row : samples.rows) {
    shown.push_back(catalog::value_to_text(row[idx]));
    auto k = value_kind(row[idx]);
    if (k != "null") kinds.insert(k);
  }
  std::string kind;
  if (kinds.empty())
    kind = "all sampled values are NULL";
  else if (kinds.size() == 1)
    kind = *kinds.begin();
  else if (kinds == std::set<std::string>{"integer", "numeric"})
    kind = "numeric";
  else
    kind = "mixed";
  return "Sampled values: " + util::join(shown, ", ") + " (" + kind + ").";
}

namespace {
llm::Shape column_summary_shape() { return {{{"columns", FieldKind::list}}}; }
}  // namespace

llm::LlmRequest column_summary_request(const catalog::TableDef& table, const ColumnGroup& group,
                                       const catalog::SampledRows& samples, const LlmContext& llm) {
  json cols = json::array();
  for (const auto& name : group.columns) {
    const auto* c = table.find_column(name);
    json entry = {{"name", name}, {"type", c ? c->sql_type : ""}};
    if (c && c->comment) entry["comment"] = *c->comment;
    auto idx = std::find(samples.columns.begin(), samples.columns.end(), name) - samples.columns.begin();
    json values = json::array();
    if (static_cast<std::size_t>(idx) < samples.columns.size())
      for (const auto& row : samples.rows) values.push_back(catalog::value_to_json(row[static_cast<std::size_t>(idx)]));
    entry["samples"] = values;
    cols.push_back(entry);
  }
  json input = {{"table", table.name}, {"row_count", table.row_count_estimate}, {"columns", cols}};
  auto shape = column_summary_shape();
  return llm.gateway.make_request(
      Purpose::column_summary, llm.model_id,
      system_prompt("You write one-sentence column summaries that explain what each column stores and how it "
                    "is likely used in analysis.",
                    shape),
      with_input("Summarize every listed column of table \"" + table.name +
                     "\". Use the sampled values to understand each column's value type and meaning. Reply with "
                     "{\"columns\": [{\"name\": ..., \"description\": ...}]} covering every column exactly once.",
                     input));
}

std::vector<ColumnSummary> summarize_columns(const catalog::TableDef& table, const ColumnGroup& group,
                                             const catalog::SampledRows& samples, const LlmContext& llm) {
  auto find_item = [](const json& reply, const std::string& col) -> const json* {
    for (const auto& item : reply.at("columns"))
      if (item.is_object() && item.value("name", std::string{}) != "" &&
          util::iequals(item.value("name", std::string{}), col))
        return &item;
    return nullptr;
  };
  llm::Validator every_column = [&](const json& reply) -> std::optional<std::string> {
    for (const auto& col : group.columns) {
      const json* item = find_item(reply, col);
      if (!item || !(*item).contains("description") || !(*item)["description"].is_string() ||
          util::trim((*item)["description"].get<std::string>()).empty())
        return "no description for column \"" + col + "\"";
    }
    return std::nullopt;
  };
  auto reply = llm.gateway.complete_structured(column_summary_request(table, group, samples, llm),
                                               column_summary_shape(), every_column);
  std::vector<ColumnSummary> out;
  for (const auto& col : group.columns) {
    std::string description = util::trim((*find_item(reply, col))["description"].get<std::string>());
    description += " " + value_type_note(samples, col);
    const auto* def = table.find_column(col);
    if (def && def->comment && !def->comment->empty()) description += " Comment: " + *def->comment;
    out.push_back({table.name, col, std::move(description)});
  }
  return out;
}

// -------------------------------------------------------- table description

TableDescription describe_table(const catalog::TableDef& table, const std::vector<ColumnSummary>& summaries,
                                const PipelineConfig& cfg, const LlmContext& llm) {
  json cols = json::array();
  for (const auto& c : table.columns) {
    std::string summary;
    for (const auto& s : summaries)
      if (util::iequals(s.column, c.name)) summary = s.description;
    cols.push_back({{"name", c.name}, {"type", c.sql_type}, {"summary", summary}});
  }
  json fks = json::array();
  for (const auto& fk : table.foreign_keys)
    fks.push_back({{"column", fk.column}, {"references", fk.ref_table + "." + fk.ref_column}});
  json input = {{"table", table.name},
                {"row_count", table.row_count_estimate},
                {"declared_primary_key", table.declared_primary_key},
                {"declared_foreign_keys", fks},
                {"max_key_attributes", cfg.key_attributes_max},
                {"columns", cols}};

  llm::Shape shape{{{"primary_key_candidates", FieldKind::list},
                    {"key_attributes", FieldKind::text_list},
                    {"table_type", FieldKind::text},
                    {"entity", FieldKind::text},
                    {"description", FieldKind::text}}};
  llm::Validator semantic = [](const json& reply) -> std::optional<std::string> {
    try {
      table_type_from_string(reply["table_type"].get<std::string>());
    } catch (const Error&) {
      return "table_type must be one of dimension, bridge, fact";
    }
    if (util::trim(reply["description"].get<std::string>()).empty()) return "description is empty";
    return std::nullopt;
  };
  auto request = llm.gateway.make_request(
      Purpose::table_description, llm.model_id,
      system_prompt("You characterize tables for OLAP analysis.", shape),
      with_input("Describe table \"" + table.name +
                     "\". (1) List candidate primary keys, most likely first; each candidate is a column name or "
                     "an array of column names. (2) List at most " +
                     std::to_string(cfg.key_attributes_max) +
                     " key attributes that best explain the table's purpose. (3) Classify the table type as "
                     "dimension, bridge, or fact. (4) Name the main entity the table focuses on. (5) Write a short "
                     "natural language description.",
                     input));
  auto reply = llm.gateway.complete_structured(request, shape, semantic);

  TableDescription d;
  d.table = table.name;
  d.table_type = table_type_from_string(reply["table_type"].get<std::string>());
  d.entity = util::trim(reply["entity"].get<std::string>());
  if (d.entity.empty()) d.entity = table.name;
  d.narrative = util::trim(reply["description"].get<std::string>());

  for (const auto& candidate : reply["primary_key_candidates"]) {
    std::vector<std::string> cols_in;
    if (candidate.is_string()) {
      cols_in.push_back(candidate.get<std::string>());
    } else if (candidate.is_array()) {
      for (const auto& c : candidate)
        if (c.is_string()) cols_in.push_back(c.get<std::string>());
    }
    if (cols_in.empty()) continue;
    std::vector<std::string> resolved;
    for (const auto& c : cols_in)
      if (auto name = canonical_column(table, c); !name.empty()) resolved.emplace_back(name);
    if (resolved.size() == cols_in.size()) {
      d.primary_key = std::move(resolved);
      break;
    }
  }
  std::set<std::string> seen;
  for (const auto& a : reply["key_attributes"]) {
    auto name = canonical_column(table, a.get<std::string>());
    if (name.empty() || !seen.insert(util::to_lower(name)).second) continue;
    if (d.key_attributes.size() < cfg.key_attributes_max) d.key_attributes.emplace_back(name);
  }
  if (d.primary_key.empty() && d.key_attributes.empty())
    throw Error(ErrorCode::NoUsableFields, "every column proposed for table " + table.name + " is unknown");
  if (d.primary_key.empty()) d.primary_key = table.declared_primary_key;
  return d;
}

std::string table_embedding_text(const TableDescription& d, const PipelineConfig& cfg) {
  std::string text = d.table + ": " + d.narrative;
  if (cfg.embed_key_attributes && !d.key_attributes.empty())
    text += " Key attributes: " + util::join(d.key_attributes, ", ") + ".";
  return text;
}

std::string entity_embedding_text(const Entity& e) {
  return e.name + ": represented by tables " + util::join(e.anchored_tables, ", ");
}

// ------------------------------------------------------------ relationships

llm::Shape relationship_shape() { return {{{"relationships", FieldKind::list}}}; }

llm::LlmRequest relationship_request(const catalog::DatabaseSchema& schema,
                                     const std::vector<TableDescription>& descriptions, const std::string& focus,
                                     const std::vector<std::string>& partners, const LlmContext& llm) {
  auto describe = [&](const std::string& name) {
    const auto& t = table_or_throw(schema, name);
    json cols = json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"type", c.sql_type}});
    json fks = json::array();
    for (const auto& fk : t.foreign_keys)
      fks.push_back({{"column", fk.column}, {"references", fk.ref_table + "." + fk.ref_column}});
    json entry = {{"name", t.name}, {"columns", cols}, {"declared_foreign_keys", fks}};
    for (const auto& d : descriptions) {
      if (!util::iequals(d.table, t.name)) continue;
      entry["entity"] = d.entity;
      entry["description"] = d.narrative;
      entry["primary_key"] = d.primary_key;
    }
    return entry;
  };
  json tables = json::array();
  tables.push_back(describe(focus));
  for (const auto& p : partners) tables.push_back(describe(p));
  json input = {{"focus_table", focus}, {"tables", tables}};
  auto shape = relationship_shape();
  return llm.gateway.make_request(
      Purpose::relationship, llm.model_id,
      system_prompt("You identify referential integrity links between tables.", shape),
      with_input("Determine which columns of the focus table \"" + focus +
                     "\" reference the other listed tables, and which columns of the other tables reference the "
                     "focus table. Report each link as {\"from_table\", \"from_column\", \"to_table\", "
                     "\"to_column\", \"rationale\"} where from is the referencing side. Declared foreign keys are "
                     "ground truth. Return an empty list when there are none.",
                     input));
}

std::vector<TableRelationship> parse_relationships(const nlohmann::json& reply, const catalog::DatabaseSchema& schema,
                                                   const std::string& focus,
                                                   const std::vector<std::string>& partners) {
  std::set<std::string> allowed{util::to_lower(focus)};
  for (const auto& p : partners) allowed.insert(util::to_lower(p));
  std::vector<TableRelationship> out;
  for (const auto& item : reply.at("relationships")) {
    if (!item.is_object()) continue;
    auto str = [&](const char* key) { return item.contains(key) && item[key].is_string() ? item[key].get<std::string>() : std::string{}; };
    const auto* from = schema.find_table(str("from_table"));
    const auto* to = schema.find_table(str("to_table"));
    if (!from || !to || from == to) continue;
    if (!allowed.count(util::to_lower(from->name)) || !allowed.count(util::to_lower(to->name))) continue;
    if (!util::iequals(from->name, focus) && !util::iequals(to->name, focus)) continue;
    auto fc = canonical_column(*from, str("from_column"));
    auto tc = canonical_column(*to, str("to_column"));
    if (fc.empty() || tc.empty()) continue;
    out.push_back({from->name, std::string(fc), to->name, std::string(tc), util::trim(str("rationale"))});
  }
  return out;
}

std::vector<TableRelationship> merge_relationships(const catalog::DatabaseSchema& schema,
                                                   const std::vector<TableRelationship>& discovered) {
  std::vector<TableRelationship> out;
  std::set<std::string> seen;
  auto add = [&](TableRelationship r) {
    if (seen.insert(r.undirected_key()).second) out.push_back(std::move(r));
  };
  for (const auto& t : schema.tables)
    for (const auto& fk : t.foreign_keys) {
      const auto* target = schema.find_table(fk.ref_table);
      if (!target || target == &t) continue;
      auto tc = canonical_column(*target, fk.ref_column);
      if (tc.empty()) continue;
      add({t.name, fk.column, target->name, std::string(tc), "declared foreign key"});
    }
  for (const auto& r : discovered) add(r);
  return out;
}

std::vector<TableRelationship> discover_relationships(const catalog::DatabaseSchema& schema,
                                                      const std::vector<TableDescription>& descriptions,
                                                      HdcIndex& index, const PipelineConfig& cfg,
                                                      const LlmContext& llm) {
  if (schema.tables.size() < 2) return merge_relationships(schema, {});
  if (!index.tables || index.tables->size() == 0)
    throw Error(ErrorCode::EmptyIndex, "table descriptions are not indexed");

  // Stage 1: coarse candidates per table from the vector index.
  std::vector<std::vector<std::string>> partners(schema.tables.size());
  for (std::size_t i = 0; i < schema.tables.size(); ++i) {
    const auto& name = schema.tables[i].name;
    const TableDescription* d = nullptr;
    for (const auto& x : descriptions)
      if (util::iequals(x.table, name)) d = &x;
    if (!d) throw Error(ErrorCode::PreconditionViolated, "table " + name + " has no description");
    auto query = llm.gateway.embed(table_embedding_text(*d, cfg));
    for (const auto& hit : index.tables->top_k(query, cfg.similar_count, name)) partners[i].push_back(hit.id);
  }

  // Stage 2: one fine-grained call per table.
  auto per_table = util::parallel_map(cfg.worker_pool_size, schema.tables.size(), [&](std::size_t i) {
    const auto& focus = schema.tables[i].name;
    auto reply = llm.gateway.complete_structured(
        relationship_request(schema, descriptions, focus, partners[i], llm), relationship_shape());
    return parse_relationships(reply, schema, focus, partners[i]);
  });
  std::vector<TableRelationship> discovered;
  for (auto& rels : per_table) discovered.insert(discovered.end(), rels.begin(), rels.end());
  return merge_relationships(schema, discovered);
}

// ----------------------------------------------------------------- entities

std::vector<std::pair<std::string, std::size_t>> relationship_degrees(const std::vector<std::string>& tables,
                                                                      const std::vector<TableRelationship>& rels) {
  std::map<std::string, std::size_t> degree;
  for (const auto& t : tables) degree[util::to_lower(t)] = 0;
  std::set<std::string> counted;
  for (const auto& r : rels) {
    if (!counted.insert(r.undirected_key()).second) continue;
    ++degree[util::to_lower(r.from_table)];
    ++degree[util::to_lower(r.to_table)];
  }
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& t : tables) out.emplace_back(t, degree[util::to_lower(t)]);
  return out;
}

std::vector<std::string> top_tables_by_degree(const std::vector<std::pair<std::string, std::size_t>>& degrees,
                                              std::size_t n) {
  auto sorted = degrees;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, sorted.size()); ++i) out.push_back(sorted[i].first);
  return out;
}

EntitySet extract_entities(const catalog::DatabaseSchema& schema, const std::vector<TableDescription>& descriptions,
                           const std::vector<TableRelationship>& relationships, const PipelineConfig& cfg,
                           const LlmContext& llm, HdcIndex* index) {
  std::vector<std::string> names;
  for (const auto& d : descriptions) names.push_back(d.table);
  auto degrees = relationship_degrees(names, relationships);
  auto top = top_tables_by_degree(degrees, cfg.entity_top_n);

  json tables = json::array();
  for (const auto& t : top) {
    json entry = {{"name", t}};
    for (const auto& [name, deg] : degrees)
      if (name == t) entry["relationship_count"] = deg;
    for (const auto& d : descriptions) {
      if (d.table != t) continue;
      entry["entity"] = d.entity;
      entry["description"] = d.narrative;
      entry["key_attributes"] = d.key_attributes;
    }
    tables.push_back(entry);
  }

  auto resolve = [&](const json& item) {
    Entity e;
    e.name = util::trim(item.value("name", std::string{}));
    std::set<std::string> seen;
    if (item.contains("tables") && item["tables"].is_array())
      for (const auto& t : item["tables"]) {
        if (!t.is_string()) continue;
        const auto* def = schema.find_table(t.get<std::string>());
        if (def && seen.insert(def->name).second) e.anchored_tables.push_back(def->name);
      }
    return e;
  };

  llm::Shape shape{{{"entities", FieldKind::list}}};
  llm::Validator usable = [&](const json& reply) -> std::optional<std::string> {
    for (const auto& item : reply["entities"])
      if (item.is_object()) {
        auto e = resolve(item);
        if (!e.name.empty() && !e.anchored_tables.empty()) return std::nullopt;
      }
    return "no entity anchored to a known table";
  };
  auto request = llm.gateway.make_request(
      Purpose::entity, llm.model_id,
      system_prompt("You identify the representative real-world entities of a database.", shape),
      with_input("These are the tables with the most relationships to other tables in database \"" +
                     schema.database_name +
                     "\". Infer the entities they represent. Reply with {\"entities\": [{\"name\": ..., "
                     "\"tables\": [...]}]}.",
                     json{{"tables", tables}}));
  auto reply = llm.gateway.complete_structured(request, shape, usable);

  EntitySet out;
  std::map<std::string, std::size_t> by_name;
  for (const auto& item : reply["entities"]) {
    if (!item.is_object()) continue;
    auto e = resolve(item);
    if (e.name.empty() || e.anchored_tables.empty()) continue;
    auto key = util::to_lower(e.name);
    if (auto it = by_name.find(key); it != by_name.end()) {
      auto& existing = out.entities[it->second].anchored_tables;
      for (auto& t : e.anchored_tables)
        if (std::find(existing.begin(), existing.end(), t) == existing.end()) existing.push_back(t);
      continue;
    }
    by_name.emplace(key, out.entities.size());
    out.entities.push_back(std::move(e));
  }
  if (index)
    for (const auto& e : out.entities)
      index->upsert_entity({"entity:" + e.name, llm.gateway.embed(entity_embedding_text(e)), e.name});
  return out;
}

DatabaseSummary summarize_database(const catalog::DatabaseSchema& schema, const EntitySet& entities,
                                   const std::vector<TableDescription>& descriptions, const LlmContext& llm) {
  if (entities.entities.empty())
    throw Error(ErrorCode::PreconditionViolated, "database summary needs at least one entity");
  json ents = json::array();
  for (const auto& e : entities.entities) ents.push_back({{"name", e.name}, {"tables", e.anchored_tables}});
  json tables = json::array();
  for (const auto& d : descriptions)
    tables.push_back({{"name", d.table}, {"entity", d.entity}, {"description", d.narrative}});
  json input = {{"database", schema.database_name}, {"entities", ents}, {"tables", tables}};

  llm::Shape shape{{{"summary", FieldKind::text}, {"keywords", FieldKind::text_list}}};
  llm::Validator non_empty = [](const json& reply) -> std::optional<std::string> {
    if (util::trim(reply["summary"].get<std::string>()).empty()) return "summary is empty";
    return std::nullopt;
  };
  auto request = llm.gateway.make_request(
      Purpose::db_summary, llm.model_id,
      system_prompt("You summarize what a database is about for analysts who have never seen it.", shape),
      with_input("Starting from the entities, infer what the database \"" + schema.database_name +
                     "\" describes and what questions it can answer. Reply with a short summary paragraph and a "
                     "list of keywords.",
                     input));
  auto reply = llm.gateway.complete_structured(request, shape, non_empty);
  return {util::trim(reply["summary"].get<std::string>()),
          dedup_ci(reply["keywords"].get<std::vector<std::string>>())};
}

// ------------------------------------------------------------- orchestration

HierarchicalDataContext generate_hdc(const catalog::DatabaseSchema& schema, catalog::SqlEngine& engine,
                                     const PipelineConfig& cfg, const LlmContext& llm) {
  cfg.validate();
  if (schema.tables.empty()) throw Error(ErrorCode::EmptySchema, "schema has no tables");

  HierarchicalDataContext hdc;
  hdc.schema = schema;
  hdc.generation_model = llm.model_id;

  auto groups = partition_columns(schema, cfg);
  std::map<std::string, catalog::SampledRows> samples = guard_stage("sampling", [&] {
    std::map<std::string, catalog::SampledRows> out;
    for (const auto& t : schema.tables)
      out.emplace(t.name, catalog::sample_rows(engine, schema, t.name, cfg.sample_rows_n, cfg.sample_seed));
    return out;
  });

  auto per_group = run_stage("column_summary", cfg.worker_pool_size, groups.size(), [&](std::size_t i) {
    const auto& g = groups[i];
    return summarize_columns(table_or_throw(schema, g.table), g, samples.at(g.table), llm);
  });
  for (auto& batch : per_group)
    hdc.column_summaries.insert(hdc.column_summaries.end(), batch.begin(), batch.end());

  hdc.table_descriptions = run_stage("table_description", cfg.worker_pool_size, schema.tables.size(),
                                     [&](std::size_t i) {
                                       const auto& t = schema.tables[i];
                                       std::vector<ColumnSummary> mine;
                                       for (const auto& s : hdc.column_summaries)
                                         if (s.table == t.name) mine.push_back(s);
                                       return describe_table(t, mine, cfg, llm);
                                     });

  HdcIndex index;
  auto vectors = run_stage("table_embedding", cfg.worker_pool_size, hdc.table_descriptions.size(),
                           [&](std::size_t i) {
                             return llm.gateway.embed(table_embedding_text(hdc.table_descriptions[i], cfg));
                           });
  guard_stage("table_embedding", [&] {
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const auto& d = hdc.table_descriptions[i];
      index.upsert_table({d.table, vectors[i], d.narrative});
    }
    return 0;
  });

  if (schema.tables.size() == 1) {
    const auto& d = hdc.table_descriptions.front();
    hdc.relationships = merge_relationships(schema, {});
    hdc.entity_set.entities.push_back({d.entity, {d.table}});
  } else {
    hdc.relationships = guard_stage(
        "relationship", [&] { return discover_relationships(schema, hdc.table_descriptions, index, cfg, llm); });
    hdc.entity_set = guard_stage("entity", [&] {
      return extract_entities(schema, hdc.table_descriptions, hdc.relationships, cfg, llm, &index);
    });
  }
  hdc.database_summary = guard_stage(
      "db_summary", [&] { return summarize_database(schema, hdc.entity_set, hdc.table_descriptions, llm); });
  hdc.check_coverage();
  return hdc;
}

HdcIndex build_index(const HierarchicalDataContext& hdc, const PipelineConfig& cfg, llm::Gateway& gateway) {
  HdcIndex index;
  for (const auto& d : hdc.table_descriptions)
    index.upsert_table({d.table, gateway.embed(table_embedding_text(d, cfg)), d.narrative});
  for (const auto& e : hdc.entity_set.entities)
    index.upsert_entity({"entity:" + e.name, gateway.embed(entity_embedding_text(e)), e.name});
  return index;
}

}  // namespace insight::hdc
