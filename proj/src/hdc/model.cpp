#include "insight/hdc/model.hpp"

#include <map>

#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::hdc {

std::string_view to_string(TableType t) {
  switch (t) {
    case TableType::dimension: return "dimension";
    case TableType::bridge: return "bridge";
    case TableType::fact: return "fact";
  }
  return "dimension";
}

TableType table_type_from_string(std::string_view s) {
  auto l = util::to_lower(util::trim(s));
  if (l == "dimension") return TableType::dimension;
  if (l == "bridge") return TableType::bridge;
  if (l == "fact") return TableType::fact;
  throw Error(ErrorCode::InvalidArgument, "table type must be dimension, bridge or fact: " + std::string(s));
}

std::string TableRelationship::undirected_key() const {
  auto a = util::to_lower(from_table + "." + from_column);
  auto b = util::to_lower(to_table + "." + to_column);
  return a < b ? a + "|" + b : b + "|" + a;
}

const TableDescription* HierarchicalDataContext::description_of(std::string_view table) const {
  for (const auto& d : table_descriptions)
    if (util::iequals(d.table, table)) return &d;
  return nullptr;
}

std::vector<const ColumnSummary*> HierarchicalDataContext::summaries_of(std::string_view table) const {
  std::vector<const ColumnSummary*> out;
  for (const auto& s : column_summaries)
    if (util::iequals(s.table, table)) out.push_back(&s);
  return out;
}

const ColumnSummary* HierarchicalDataContext::summary_of(std::string_view table, std::string_view column) const {
  for (const auto& s : column_summaries)
    if (util::iequals(s.table, table) && util::iequals(s.column, column)) return &s;
  return nullptr;
}

void HierarchicalDataContext::check_coverage() const {
  std::map<std::string, int> seen;
  for (const auto& s : column_summaries) ++seen[util::to_lower(s.table + "." + s.column)];
  for (const auto& t : schema.tables) {
    if (!description_of(t.name)) throw Error(ErrorCode::InvalidArgument, "no description for table " + t.name);
    for (const auto& c : t.columns) {
      auto n = seen[util::to_lower(t.name + "." + c.name)];
      if (n != 1)
        throw Error(ErrorCode::InvalidArgument,
                    "column " + t.name + "." + c.name + " has " + std::to_string(n) + " summaries");
    }
  }
  if (seen.size() != schema.column_count())
    throw Error(ErrorCode::InvalidArgument, "summaries reference columns outside the schema");
}

nlohmann::json to_document(const HierarchicalDataContext& hdc) {
  nlohmann::json doc;
  doc["version"] = kHdcFormatVersion;
  doc["database"] = hdc.schema;
  doc["generation_model"] = hdc.generation_model;
  auto& cols = doc["columns"] = nlohmann::json::array();
  for (const auto& s : hdc.column_summaries)
    cols.push_back({{"table", s.table}, {"column", s.column}, {"description", s.description}});
  auto& tables = doc["tables"] = nlohmann::json::array();
  for (const auto& d : hdc.table_descriptions)
    tables.push_back({{"table", d.table},
                      {"primary_key", d.primary_key},
                      {"key_attributes", d.key_attributes},
                      {"table_type", to_string(d.table_type)},
                      {"entity", d.entity},
                      {"narrative", d.narrative}});
  auto& rels = doc["relationships"] = nlohmann::json::array();
  for (const auto& r : hdc.relationships)
    rels.push_back({{"from_table", r.from_table},
                    {"from_column", r.from_column},
                    {"to_table", r.to_table},
                    {"to_column", r.to_column},
                    {"rationale", r.rationale}});
  auto& ents = doc["entities"] = nlohmann::json::array();
  for (const auto& e : hdc.entity_set.entities) ents.push_back({{"name", e.name}, {"tables", e.anchored_tables}});
  doc["summary"] = {{"text", hdc.database_summary.summary}, {"keywords", hdc.database_summary.keywords}};
  return doc;
}

HierarchicalDataContext from_document(const nlohmann::json& doc) {
  auto version = doc.value("version", std::string{});
  if (version != kHdcFormatVersion)
    throw Error(ErrorCode::VersionMismatch,
                "unsupported HDC document version \"" + version + "\" (expected " + std::string(kHdcFormatVersion) + ")");
  try {
    HierarchicalDataContext hdc;
    hdc.schema = doc.at("database").get<catalog::DatabaseSchema>();
    hdc.generation_model = doc.value("generation_model", std::string{});
    for (const auto& c : doc.at("columns"))
      hdc.column_summaries.push_back({c.at("table"), c.at("column"), c.at("description")});
    for (const auto& t : doc.at("tables")) {
      TableDescription d;
      d.table = t.at("table").get<std::string>();
      d.primary_key = t.at("primary_key").get<std::vector<std::string>>();
      d.key_attributes = t.at("key_attributes").get<std::vector<std::string>>();
      d.table_type = table_type_from_string(t.at("table_type").get<std::string>());
      d.entity = t.at("entity").get<std::string>();
      d.narrative = t.at("narrative").get<std::string>();
      hdc.table_descriptions.push_back(std::move(d));
    }
    for (const auto& r : doc.at("relationships"))
      hdc.relationships.push_back(
          {r.at("from_table"), r.at("from_column"), r.at("to_table"), r.at("to_column"), r.at("rationale")});
    for (const auto& e : doc.at("entities"))
      hdc.entity_set.entities.push_back({e.at("name"), e.at("tables").get<std::vector<std::string>>()});
    hdc.database_summary.summary = doc.at("summary").at("text").get<std::string>();
    hdc.database_summary.keywords = doc.at("summary").at("keywords").get<std::vector<std::string>>();
    return hdc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("malformed HDC document: ") + e.what());
  }
}

std::string serialize(const HierarchicalDataContext& hdc) { return to_document(hdc).dump(2); }

}  // namespace insight::hdc
