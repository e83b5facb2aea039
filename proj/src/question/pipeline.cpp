#include "insight/question/pipeline.hpp"

#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::question {

namespace {

using llm::FieldKind;
using nlohmann::json;

json database_context(const hdc::HierarchicalDataContext& hdc) {
  json tables = json::array();
  for (const auto& d : hdc.table_descriptions)
    tables.push_back({{"name", d.table}, {"entity", d.entity}, {"description", d.narrative}});
  return {{"database", hdc.schema.database_name},
          {"summary", hdc.database_summary.summary},
          {"keywords", hdc.database_summary.keywords},
          {"tables", tables}};
}

std::vector<std::string> clean_list(const json& arr) {
  std::vector<std::string> out;
  for (const auto& s : arr) {
    auto t = util::trim(s.get<std::string>());
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::vector<std::string> ClarifiedTask::work_items() const {
  if (needs_decomposition && !sub_tasks.empty()) return sub_tasks;
  return {clarified};
}

void ClarifiedTask::check_invariants(std::size_t max_sub_tasks) const {
  if (needs_decomposition == sub_tasks.empty())
    throw Error(ErrorCode::InvalidArgument, "sub_tasks must be non-empty exactly when decomposition is needed");
  if (sub_tasks.size() > max_sub_tasks) throw Error(ErrorCode::InvalidArgument, "too many sub-tasks");
}

void to_json(nlohmann::json& j, const ClarifiedTask& t) {
  j = {{"original", t.original},
       {"clarified", t.clarified},
       {"assumptions", t.assumptions},
       {"needs_decomposition", t.needs_decomposition},
       {"sub_tasks", t.sub_tasks},
       {"off_topic", t.off_topic},
       {"suggestion", t.suggestion}};
}

void from_json(const nlohmann::json& j, ClarifiedTask& t) {
  t.original = j.at("original").get<std::string>();
  t.clarified = j.at("clarified").get<std::string>();
  t.assumptions = j.at("assumptions").get<std::vector<std::string>>();
  t.needs_decomposition = j.at("needs_decomposition").get<bool>();
  t.sub_tasks = j.at("sub_tasks").get<std::vector<std::string>>();
  t.off_topic = j.value("off_topic", false);
  t.suggestion = j.value("suggestion", std::string{});
}

ClarifiedTask clarify(const UserQuestion& question, const hdc::HierarchicalDataContext& hdc, llm::Gateway& gateway) {
  auto original = util::trim(question.raw_text);
  if (original.empty()) throw Error(ErrorCode::EmptyInput, "question is empty");

  llm::Shape shape{{{"clarified", FieldKind::text},
                    {"assumptions", FieldKind::text_list},
                    {"off_topic", FieldKind::boolean, false},
                    {"suggestion", FieldKind::text, false}}};
  llm::Validator non_empty = [](const json& reply) -> std::optional<std::string> {
    if (util::trim(reply["clarified"].get<std::string>()).empty() && !reply.value("off_topic", false))
      return "clarified question is empty";
    return std::nullopt;
  };
  json input = database_context(hdc);
  input["question"] = original;
  auto request = gateway.make_request(
      llm::Purpose::clarify, question.model_id,
      "You are a data analyst helping a user explore an unfamiliar database. Think step by step about what the "
      "user most plausibly wants given the database context, then reply with " +
          shape.describe() + ".",
      "Rewrite the question so it is self-contained and precise: make implicit parameters explicit (time range, "
      "metric, grouping, filters). List every assumption you added, one per entry. If the question is already "
      "precise, return it unchanged with an empty assumptions list. If the database cannot answer it, set "
      "\"off_topic\" to true and give a \"suggestion\" for a question it can answer.\n\n### Input\n" +
          input.dump(2));
  auto reply = gateway.complete_structured(request, shape, non_empty);

  ClarifiedTask task;
  task.original = original;
  task.off_topic = reply.value("off_topic", false);
  task.suggestion = util::trim(reply.value("suggestion", std::string{}));
  task.assumptions = clean_list(reply["assumptions"]);
  task.clarified = util::trim(reply["clarified"].get<std::string>());
  if (task.off_topic || task.assumptions.empty() || task.clarified.empty()) {
    task.clarified = original;
    task.assumptions.clear();
  }
  return task;
}

ClarifiedTask decompose(ClarifiedTask task, const hdc::HierarchicalDataContext& hdc, const hdc::PipelineConfig& cfg,
                        const hdc::LlmContext& llm) {
  task.needs_decomposition = false;
  task.sub_tasks.clear();
  if (task.off_topic) return task;

  llm::Shape shape{{{"needs_decomposition", FieldKind::boolean}, {"sub_tasks", FieldKind::text_list}}};
  json input = database_context(hdc);
  input["task"] = task.clarified;
  input["max_sub_tasks"] = cfg.decompose_max_subtasks;
  auto request = llm.gateway.make_request(
      llm::Purpose::decompose, llm.model_id,
      "You plan exploratory data analysis. Think step by step about whether one SQL query can answer the task, "
      "then reply with " +
          shape.describe() + ".",
      "Decide whether the task must be decomposed into sub-tasks. Each sub-task must be answerable by exactly one "
      "SQL query over this database. Use at most " +
          std::to_string(cfg.decompose_max_subtasks) +
          " sub-tasks. If a single query suffices, set needs_decomposition to false and return an empty list.\n\n"
          "### Input\n" +
          input.dump(2));
  auto reply = llm.gateway.complete_structured(request, shape);

  auto subs = clean_list(reply["sub_tasks"]);
  if (reply["needs_decomposition"].get<bool>() && subs.size() >= 2) {
    if (subs.size() > cfg.decompose_max_subtasks) {
      task.assumptions.push_back("decomposition truncated from " + std::to_string(subs.size()) + " to " +
                                 std::to_string(cfg.decompose_max_subtasks) + " sub-tasks");
      subs.resize(cfg.decompose_max_subtasks);
    }
    task.needs_decomposition = true;
    task.sub_tasks = std::move(subs);
  }
  return task;
}

}  // namespace insight::question
