#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

namespace insight::hdc {

// Largest column group whose summarization prompt fits the context window:
// (window - scaffold - reserved output) / tokens per column.
std::size_t derive_group_max_columns(std::size_t context_window, std::size_t scaffold_tokens,
                                     std::size_t output_tokens, std::size_t tokens_per_column);

struct PipelineConfig {
  std::size_t group_max_columns = 10;  // derive_group_max_columns(8192, 1024, 1024, 600)
  std::size_t sample_rows_n = 3;
  std::uint64_t sample_seed = 7;
  std::size_t key_attributes_max = 5;
  std::size_t similar_count = 5;
  std::size_t coarse_table_top_n = 5;
  std::size_t entity_top_n = 3;
  std::size_t refine_max_rounds = 3;
  std::size_t worker_pool_size = 4;
  std::size_t decompose_max_subtasks = 5;

  std::size_t row_cap = 10'000;
  std::size_t schema_filter_group_tokens = 1500;
  std::int64_t statement_timeout_ms = 30'000;
  bool expand_with_neighbors = true;
  bool embed_key_attributes = true;  // table embedding text = narrative (+ key attributes)
  bool chart_tiebreak = true;
  bool require_confirmation = false;

  // Throws InvalidArgument when any count is zero.
  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
// Missing fields keep their defaults.
void from_json(const nlohmann::json& j, PipelineConfig& c);

}  // namespace insight::hdc
