#include "insight/hdc/config.hpp"

#include <string>

#include "insight/error.hpp"

namespace insight::hdc {

std::size_t derive_group_max_columns(std::size_t context_window, std::size_t scaffold_tokens,
                                     std::size_t output_tokens, std::size_t tokens_per_column) {
  if (tokens_per_column == 0) throw Error(ErrorCode::InvalidArgument, "tokens_per_column must be positive");
  std::size_t reserved = scaffold_tokens + output_tokens;
  if (context_window <= reserved) return 1;
  return std::max<std::size_t>(1, (context_window - reserved) / tokens_per_column);
}

void PipelineConfig::validate() const {
  auto require = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be >= 1");
  };
  require(group_max_columns, "group_max_columns");
  require(sample_rows_n, "sample_rows_n");
  require(key_attributes_max, "key_attributes_max");
  require(similar_count, "similar_count");
  require(coarse_table_top_n, "coarse_table_top_n");
  require(entity_top_n, "entity_top_n");
  require(refine_max_rounds, "refine_max_rounds");
  require(worker_pool_size, "worker_pool_size");
  require(decompose_max_subtasks, "decompose_max_subtasks");
  require(row_cap, "row_cap");
  require(schema_filter_group_tokens, "schema_filter_group_tokens");
  if (statement_timeout_ms <= 0) throw Error(ErrorCode::InvalidArgument, "statement_timeout_ms must be > 0");
}

#define INSIGHT_CONFIG_FIELDS(X)  \
  X(group_max_columns)            \
  X(sample_rows_n)                \
  X(sample_seed)                  \
  X(key_attributes_max)           \
  X(similar_count)                \
  X(coarse_table_top_n)           \
  X(entity_top_n)                 \
  X(refine_max_rounds)            \
  X(worker_pool_size)             \
  X(decompose_max_subtasks)       \
  X(row_cap)                      \
  X(schema_filter_group_tokens)   \
  X(statement_timeout_ms)         \
  X(expand_with_neighbors)        \
  X(embed_key_attributes)         \
  X(chart_tiebreak)               \
  X(require_confirmation)

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json::object();
#define X(name) j[#name] = c.name;
  INSIGHT_CONFIG_FIELDS(X)
#undef X
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
#define X(name) \
  if (j.contains(#name)) j.at(#name).get_to(c.name);
  INSIGHT_CONFIG_FIELDS(X)
#undef X
}

}  // namespace insight::hdc
