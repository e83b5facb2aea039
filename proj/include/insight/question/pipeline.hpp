#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "insight/hdc/config.hpp"
#include "insight/hdc/generator.hpp"
#include "insight/hdc/model.hpp"
#include "insight/llm/gateway.hpp"

namespace insight::question {

struct UserQuestion {
  std::string raw_text;
  std::string session_id;
  std::string model_id;

  bool operator==(const UserQuestion&) const = default;
};

struct ClarifiedTask {
  std::string original;
  std::string clarified;
  std::vector<std::string> assumptions;
  bool needs_decomposition = false;
  std::vector<std::string> sub_tasks;

  // The model judged the question unanswerable from this database;
  // `suggestion` proposes a rephrasing.
  bool off_topic = false;
  std::string suggestion;

  // The texts to answer: sub-tasks when decomposed, else the clarified task.
  std::vector<std::string> work_items() const;

  // Throws InvalidArgument when the sub_tasks/flag coupling or the cap is
  // violated.
  void check_invariants(std::size_t max_sub_tasks) const;

  bool operator==(const ClarifiedTask&) const = default;
};

void to_json(nlohmann::json& j, const ClarifiedTask& t);
void from_json(const nlohmann::json& j, ClarifiedTask& t);

// Resolves implicit parameters of the question against the HDC. A question
// needing no clarification comes back unchanged with no assumptions.
ClarifiedTask clarify(const UserQuestion& question, const hdc::HierarchicalDataContext& hdc, llm::Gateway& gateway);

// Decides whether the task splits into independently answerable sub-tasks,
// keeping at most decompose_max_subtasks of them.
ClarifiedTask decompose(ClarifiedTask task, const hdc::HierarchicalDataContext& hdc, const hdc::PipelineConfig& cfg,
                        const hdc::LlmContext& llm);

}  // namespace insight::question
