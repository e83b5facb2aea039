#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "insight/catalog/engine.hpp"
#include "insight/error.hpp"
#include "insight/hdc/config.hpp"
#include "insight/hdc/generator.hpp"
#include "insight/hdc/model.hpp"
#include "insight/question/pipeline.hpp"
#include "insight/tisql/types.hpp"
#include "insight/vindex/index.hpp"

namespace insight::tisql {

// Top coarse_table_top_n tables by cosine against the embedded task text.
// Throws EmptyIndex when no table vectors exist.
std::vector<vindex::RankedHit> coarse_select_tables(const std::string& task_text, const hdc::HdcIndex& index,
                                                    const hdc::PipelineConfig& cfg, llm::Gateway& gateway);

// Ranked tables followed by their 1-hop relationship neighbours, deduplicated.
std::vector<std::string> expand_with_neighbors(const std::vector<std::string>& ranked,
                                               const hdc::HierarchicalDataContext& hdc);

// Greedy grouping in candidate order: a table joins the current group while
// the group's summary blocks stay within `budget_tokens`. An oversized table
// gets a group of its own.
std::vector<std::vector<std::string>> group_tables(const std::vector<std::string>& candidates,
                                                   const hdc::HierarchicalDataContext& hdc,
                                                   std::size_t budget_tokens);

llm::LlmRequest filter_request(const std::string& task_text, const std::vector<std::string>& group,
                               const hdc::HierarchicalDataContext& hdc, const hdc::LlmContext& llm);
llm::Shape filter_shape();

// Reduce step: union in group order, identifiers absent from the schema
// dropped.
SchemaSubset merge_filter_outputs(const std::vector<nlohmann::json>& replies, const catalog::DatabaseSchema& schema);

// One map call per group, then reduce. Throws NoRelevantSchema when nothing
// survives.
SchemaSubset fine_filter(const std::string& task_text, const std::vector<std::string>& candidates,
                         const hdc::HierarchicalDataContext& hdc, const hdc::PipelineConfig& cfg,
                         const hdc::LlmContext& llm);

// Strips fences and a trailing semicolon. Throws MalformedOutput for empty or
// multi-statement text and NonReadOnly for anything but a query.
std::string normalize_sql_reply(std::string_view reply);

llm::LlmRequest generation_request(const std::string& task_text, const SchemaSubset& subset,
                                   const hdc::HierarchicalDataContext& hdc, const std::string& dialect,
                                   const hdc::LlmContext& llm);

SqlCandidate generate_sql(const std::string& task_text, const SchemaSubset& subset,
                          const hdc::HierarchicalDataContext& hdc, const std::string& dialect,
                          const hdc::LlmContext& llm);

llm::LlmRequest refine_request(const std::string& task_text, const std::string& sql, const std::string& error,
                               Phase phase, const SchemaSubset& subset, const hdc::HierarchicalDataContext& hdc,
                               const hdc::LlmContext& llm);

// Context the correction prompt needs besides the failing statement.
struct RefineContext {
  std::string task_text;
  const SchemaSubset* subset = nullptr;
  const hdc::HierarchicalDataContext* hdc = nullptr;
};

class RefinementError : public Error {
 public:
  RefinementError(RefinementTrace trace, const std::string& last_error);
  const RefinementTrace& trace() const { return trace_; }

 private:
  RefinementTrace trace_;
};

struct ChainResult {
  QueryResult result;
  RefinementTrace trace;
};

using StageHook = std::function<void(std::string_view stage)>;

// Explain phase: up to refine_max_rounds EXPLAIN attempts, each failure fed
// back to the model for a corrected statement (no correction is requested
// after the final attempt). Execute phase: up to refine_max_rounds runs; a
// corrected statement must pass EXPLAIN before it is run. Statements that are
// not read-only never reach the engine; the model is told and asked again.
// Throws RefinementError (RefinementExhausted) carrying the failed trace, or
// EngineUnavailable.
ChainResult run_refinement_chain(const SqlCandidate& candidate, catalog::SqlEngine& engine,
                                 const hdc::PipelineConfig& cfg, const hdc::LlmContext& llm,
                                 const RefineContext& ctx, const StageHook& on_stage = {});

struct TaskError {
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;

  bool operator==(const TaskError&) const = default;
};

struct TaskAnswer {
  std::string sub_task;
  std::optional<SchemaSubset> subset;
  std::optional<SqlCandidate> sql;
  std::optional<QueryResult> result;
  std::optional<RefinementTrace> trace;
  std::optional<TaskError> error;

  bool ok() const { return result.has_value() && !error; }
  bool operator==(const TaskAnswer&) const = default;
};

void to_json(nlohmann::json& j, const TaskAnswer& a);
void from_json(const nlohmann::json& j, TaskAnswer& a);

// Schema linking, generation and refinement for one task text.
TaskAnswer answer_one(const std::string& task_text, const hdc::HierarchicalDataContext& hdc,
                      const hdc::HdcIndex& index, catalog::SqlEngine& engine, const hdc::PipelineConfig& cfg,
                      const hdc::LlmContext& llm, const StageHook& on_stage = {});

// One independent run per work item, concurrently up to the gateway's
// in-flight limit, output in work-item order. Failures are recorded on their
// entry only.
std::vector<TaskAnswer> answer_task(const question::ClarifiedTask& task, const hdc::HierarchicalDataContext& hdc,
                                    const hdc::HdcIndex& index, catalog::SqlEngine& engine,
                                    const hdc::PipelineConfig& cfg, const hdc::LlmContext& llm,
                                    const StageHook& on_stage = {});

}  // namespace insight::tisql
