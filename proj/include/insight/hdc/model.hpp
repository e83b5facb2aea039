#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "insight/catalog/schema.hpp"

namespace insight::hdc {

struct ColumnGroup {
  std::string table;
  std::vector<std::string> columns;

  bool operator==(const ColumnGroup&) const = default;
};

struct ColumnSummary {
  std::string table;
  std::string column;
  std::string description;

  bool operator==(const ColumnSummary&) const = default;
};

enum class TableType { dimension, bridge, fact };

std::string_view to_string(TableType t);
// Case-insensitive; throws InvalidArgument for anything but the three classes.
TableType table_type_from_string(std::string_view s);

struct TableDescription {
  std::string table;
  std::vector<std::string> primary_key;
  std::vector<std::string> key_attributes;
  TableType table_type = TableType::dimension;
  std::string entity;
  std::string narrative;

  bool operator==(const TableDescription&) const = default;
};

struct TableRelationship {
  std::string from_table;
  std::string from_column;
  std::string to_table;
  std::string to_column;
  std::string rationale;

  // Direction-free identity used for deduplication and degree counting.
  std::string undirected_key() const;

  bool operator==(const TableRelationship&) const = default;
};

struct Entity {
  std::string name;
  std::vector<std::string> anchored_tables;

  bool operator==(const Entity&) const = default;
};

struct EntitySet {
  std::vector<Entity> entities;

  bool operator==(const EntitySet&) const = default;
};

struct DatabaseSummary {
  std::string summary;
  std::vector<std::string> keywords;

  bool operator==(const DatabaseSummary&) const = default;
};

struct HierarchicalDataContext {
  catalog::DatabaseSchema schema;
  std::vector<ColumnSummary> column_summaries;
  std::vector<TableDescription> table_descriptions;
  std::vector<TableRelationship> relationships;
  EntitySet entity_set;
  DatabaseSummary database_summary;
  std::string generation_model;

  const TableDescription* description_of(std::string_view table) const;
  std::vector<const ColumnSummary*> summaries_of(std::string_view table) const;
  const ColumnSummary* summary_of(std::string_view table, std::string_view column) const;

  // Throws InvalidArgument unless every table has a description and every
  // column exactly one summary.
  void check_coverage() const;

  bool operator==(const HierarchicalDataContext&) const = default;
};

inline constexpr std::string_view kHdcFormatVersion = "insight-hdc/1";

nlohmann::json to_document(const HierarchicalDataContext& hdc);
// Throws VersionMismatch for any version tag but kHdcFormatVersion.
HierarchicalDataContext from_document(const nlohmann::json& doc);

// Canonical serialized text (sorted keys, two-space indent).
std::string serialize(const HierarchicalDataContext& hdc);

}  // namespace insight::hdc
