#include "insight/service/types.hpp"

#include <chrono>

#include "insight/error.hpp"

namespace insight::service {

using nlohmann::json;

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string_view to_string(HdcState s) {
  switch (s) {
    case HdcState::none: return "none";
    case HdcState::generating: return "generating";
    case HdcState::ready: return "ready";
    case HdcState::failed: return "failed";
  }
  return "none";
}

HdcState hdc_state_from_string(std::string_view s) {
  for (auto st : {HdcState::none, HdcState::generating, HdcState::ready, HdcState::failed})
    if (to_string(st) == s) return st;
  throw Error(ErrorCode::InvalidArgument, "unknown hdc state: " + std::string(s));
}

std::string_view to_string(TurnStatus s) {
  switch (s) {
    case TurnStatus::running: return "running";
    case TurnStatus::awaiting_confirmation: return "awaiting_confirmation";
    case TurnStatus::done: return "done";
    case TurnStatus::failed: return "failed";
  }
  return "failed";
}

TurnStatus turn_status_from_string(std::string_view s) {
  for (auto st : {TurnStatus::running, TurnStatus::awaiting_confirmation, TurnStatus::done, TurnStatus::failed})
    if (to_string(st) == s) return st;
  throw Error(ErrorCode::InvalidArgument, "unknown turn status: " + std::string(s));
}

void to_json(json& j, const Dataset& d) {
  j = {{"id", d.id},
       {"name", d.name},
       {"connection", d.connection_spec},
       {"schema", d.schema},
       {"hdc_state", to_string(d.hdc_state)},
       {"hdc_error", d.hdc_error},
       {"created_at", d.created_at}};
}

void from_json(const json& j, Dataset& d) {
  d.id = j.at("id").get<std::string>();
  d.name = j.at("name").get<std::string>();
  d.connection_spec = j.at("connection").get<std::string>();
  d.schema = j.at("schema").get<catalog::DatabaseSchema>();
  d.hdc_state = hdc_state_from_string(j.at("hdc_state").get<std::string>());
  d.hdc_error = j.at("hdc_error").get<std::string>();
  d.created_at = j.at("created_at").get<std::int64_t>();
}

void to_json(json& j, const Session& s) {
  j = {{"id", s.id}, {"dataset_id", s.dataset_id}, {"model_id", s.model_id}, {"created_at", s.created_at}};
}

void to_json(json& j, const StageEvent& e) { j = {{"stage", e.stage}, {"at", e.at}}; }

void to_json(json& j, const TurnResult& r) {
  j = r.answer;
  j["recommendations"] = r.recommendations;
  if (r.answer.result && !r.recommendations.empty())
    j["chart"] = chart::chart_payload(r.recommendations.front(), *r.answer.result);
}

void from_json(const json& j, TurnResult& r) {
  r.answer = j.get<tisql::TaskAnswer>();
  r.recommendations = j.at("recommendations").get<std::vector<chart::ChartRecommendation>>();
}

void to_json(json& j, const Turn& t) {
  json events = json::array();
  for (const auto& e : t.stage_events) events.push_back(e);
  j = {{"id", t.id},
       {"session_id", t.session_id},
       {"seq", t.seq},
       {"question", {{"text", t.question.raw_text}, {"model_id", t.question.model_id}}},
       {"model_id", t.question.model_id},
       {"clarified", t.clarified ? json(*t.clarified) : json(nullptr)},
       {"results", t.results},
       {"attempts", t.attempts},
       {"status", to_string(t.status)},
       {"stage_events", events},
       {"error", t.error ? json{{"code", to_string(t.error->code)}, {"message", t.error->message}} : json(nullptr)},
       {"overview", t.overview ? *t.overview : json(nullptr)},
       {"created_at", t.created_at}};
}

void from_json(const json& j, Turn& t) {
  t = Turn{};
  t.id = j.at("id").get<std::string>();
  t.session_id = j.at("session_id").get<std::string>();
  t.seq = j.at("seq").get<std::size_t>();
  t.question.raw_text = j.at("question").at("text").get<std::string>();
  t.question.model_id = j.at("question").at("model_id").get<std::string>();
  t.question.session_id = t.session_id;
  if (!j.at("clarified").is_null()) t.clarified = j["clarified"].get<question::ClarifiedTask>();
  t.results = j.at("results").get<std::vector<TurnResult>>();
  t.attempts = j.at("attempts").get<std::vector<tisql::TaskAnswer>>();
  t.status = turn_status_from_string(j.at("status").get<std::string>());
  for (const auto& e : j.at("stage_events"))
    t.stage_events.push_back({e.at("stage").get<std::string>(), e.at("at").get<std::int64_t>()});
  if (!j.at("error").is_null())
    t.error = tisql::TaskError{error_code_from_string(j["error"].at("code").get<std::string>()),
                               j["error"].at("message").get<std::string>()};
  if (!j.at("overview").is_null()) t.overview = j["overview"];
  t.created_at = j.at("created_at").get<std::int64_t>();
}

void to_json(json& j, const Bookmark& b) {
  j = {{"id", b.id},
       {"session_id", b.session_id},
       {"turn_id", b.turn_id},
       {"sub_task_index", b.sub_task_index},
       {"label", b.label},
       {"created_at", b.created_at}};
}

}  // namespace insight::service
