#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "insight/catalog/schema.hpp"
#include "insight/chart/chart.hpp"
#include "insight/question/pipeline.hpp"
#include "insight/tisql/pipeline.hpp"

namespace insight::service {

// Milliseconds since the Unix epoch.
std::int64_t now_ms();

enum class HdcState { none, generating, ready, failed };
std::string_view to_string(HdcState s);
HdcState hdc_state_from_string(std::string_view s);

struct Dataset {
  std::string id;
  std::string name;
  std::string connection_spec;
  catalog::DatabaseSchema schema;
  HdcState hdc_state = HdcState::none;
  std::string hdc_error;
  std::int64_t created_at = 0;

  bool operator==(const Dataset&) const = default;
};

struct Session {
  std::string id;
  std::string dataset_id;
  std::string model_id;
  std::int64_t created_at = 0;

  bool operator==(const Session&) const = default;
};

struct StageEvent {
  std::string stage;
  std::int64_t at = 0;

  bool operator==(const StageEvent&) const = default;
};

// Stage tags in pipeline order.
inline constexpr std::string_view kPipelineStages[] = {"clarify", "decompose", "sql", "refine", "execute", "chart"};
// The only stage of an HDC overview turn.
inline constexpr std::string_view kOverviewStage = "hdc";

enum class TurnStatus { running, awaiting_confirmation, done, failed };
std::string_view to_string(TurnStatus s);
TurnStatus turn_status_from_string(std::string_view s);

struct TurnResult {
  tisql::TaskAnswer answer;
  std::vector<chart::ChartRecommendation> recommendations;

  bool operator==(const TurnResult&) const = default;
};

struct Turn {
  std::string id;
  std::string session_id;
  std::size_t seq = 0;
  question::UserQuestion question;
  std::optional<question::ClarifiedTask> clarified;
  // Present only when status is done.
  std::vector<TurnResult> results;
  // Sub-task answers of a failed turn, kept for inspection.
  std::vector<tisql::TaskAnswer> attempts;
  TurnStatus status = TurnStatus::running;
  std::vector<StageEvent> stage_events;
  std::optional<tisql::TaskError> error;
  // HDC overview of an "understand this dataset" turn.
  std::optional<nlohmann::json> overview;
  std::int64_t created_at = 0;

  bool finished() const { return status == TurnStatus::done || status == TurnStatus::failed; }
  bool operator==(const Turn&) const = default;
};

struct Bookmark {
  std::string id;
  std::string session_id;
  std::string turn_id;
  std::size_t sub_task_index = 0;
  std::string label;
  std::int64_t created_at = 0;

  bool operator==(const Bookmark&) const = default;
};

void to_json(nlohmann::json& j, const Dataset& d);
void from_json(const nlohmann::json& j, Dataset& d);
void to_json(nlohmann::json& j, const Session& s);
void to_json(nlohmann::json& j, const StageEvent& e);
void to_json(nlohmann::json& j, const TurnResult& r);
void from_json(const nlohmann::json& j, TurnResult& r);
void to_json(nlohmann::json& j, const Turn& t);
void from_json(const nlohmann::json& j, Turn& t);
void to_json(nlohmann::json& j, const Bookmark& b);

}  // namespace insight::service
