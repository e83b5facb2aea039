#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "insight/catalog/engine.hpp"
#include "insight/catalog/schema.hpp"
#include "insight/error.hpp"
#include "insight/hdc/config.hpp"
#include "insight/hdc/model.hpp"
#include "insight/llm/gateway.hpp"
#include "insight/vindex/index.hpp"

namespace insight::hdc {

// Table and entity vectors derived from an HDC. Indexes are created on the
// first upsert, sized by the embedding dimension.
struct HdcIndex {
  std::unique_ptr<vindex::VectorIndex> tables;
  std::unique_ptr<vindex::VectorIndex> entities;

  void upsert_table(vindex::IndexEntry entry);
  void upsert_entity(vindex::IndexEntry entry);
};

// Model binding for one pipeline run.
struct LlmContext {
  llm::Gateway& gateway;
  std::string model_id;
};

// Vertical partitioning: per table (schema order), consecutive runs of at most
// group_max_columns columns.
std::vector<ColumnGroup> partition_columns(const catalog::DatabaseSchema& schema, const PipelineConfig& cfg);

// Deterministic note describing the sampled values of one column.
std::string value_type_note(const catalog::SampledRows& samples, std::string_view column);

llm::LlmRequest column_summary_request(const catalog::TableDef& table, const ColumnGroup& group,
                                       const catalog::SampledRows& samples, const LlmContext& llm);

std::vector<ColumnSummary> summarize_columns(const catalog::TableDef& table, const ColumnGroup& group,
                                             const catalog::SampledRows& samples, const LlmContext& llm);

TableDescription describe_table(const catalog::TableDef& table, const std::vector<ColumnSummary>& summaries,
                                const PipelineConfig& cfg, const LlmContext& llm);

std::string table_embedding_text(const TableDescription& d, const PipelineConfig& cfg);
std::string entity_embedding_text(const Entity& e);

// Fine-grained relationship prompt for `focus` against `partners`.
llm::LlmRequest relationship_request(const catalog::DatabaseSchema& schema,
                                     const std::vector<TableDescription>& descriptions, const std::string& focus,
                                     const std::vector<std::string>& partners, const LlmContext& llm);

// Keeps only links touching `focus` whose tables are in {focus} ∪ partners
// and whose columns exist.
std::vector<TableRelationship> parse_relationships(const nlohmann::json& reply, const catalog::DatabaseSchema& schema,
                                                   const std::string& focus,
                                                   const std::vector<std::string>& partners);

llm::Shape relationship_shape();

// Declared foreign keys first (schema order), then `discovered` in order;
// duplicates by undirected key keep the first occurrence.
std::vector<TableRelationship> merge_relationships(const catalog::DatabaseSchema& schema,
                                                   const std::vector<TableRelationship>& discovered);

std::vector<TableRelationship> discover_relationships(const catalog::DatabaseSchema& schema,
                                                      const std::vector<TableDescription>& descriptions,
                                                      HdcIndex& index, const PipelineConfig& cfg,
                                                      const LlmContext& llm);

// Undirected relationship degree of every listed table.
std::vector<std::pair<std::string, std::size_t>> relationship_degrees(const std::vector<std::string>& tables,
                                                                      const std::vector<TableRelationship>& rels);

// Top n by degree, ties by ascending table name.
std::vector<std::string> top_tables_by_degree(const std::vector<std::pair<std::string, std::size_t>>& degrees,
                                              std::size_t n);

EntitySet extract_entities(const catalog::DatabaseSchema& schema, const std::vector<TableDescription>& descriptions,
                           const std::vector<TableRelationship>& relationships, const PipelineConfig& cfg,
                           const LlmContext& llm, HdcIndex* index);

DatabaseSummary summarize_database(const catalog::DatabaseSchema& schema, const EntitySet& entities,
                                   const std::vector<TableDescription>& descriptions, const LlmContext& llm);

class HdcGenerationError : public Error {
 public:
  HdcGenerationError(std::string stage, std::size_t completed, std::size_t total, ErrorCode cause,
                     const std::string& cause_message);

  const std::string& stage() const { return stage_; }
  std::size_t completed() const { return completed_; }
  std::size_t total() const { return total_; }
  ErrorCode cause() const { return cause_; }

 private:
  std::string stage_;
  std::size_t completed_;
  std::size_t total_;
  ErrorCode cause_;
};

// Full pipeline. Column groups and table descriptions fan out over
// worker_pool_size threads; merges are in deterministic schema order.
HierarchicalDataContext generate_hdc(const catalog::DatabaseSchema& schema, catalog::SqlEngine& engine,
                                     const PipelineConfig& cfg, const LlmContext& llm);

// Rebuilds table and entity vectors from a stored HDC.
HdcIndex build_index(const HierarchicalDataContext& hdc, const PipelineConfig& cfg, llm::Gateway& gateway);

}  // namespace insight::hdc
