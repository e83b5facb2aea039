#include "insight/service/service.hpp"

#include <algorithm>
#include <cctype>

#include "insight/catalog/hdc_store.hpp"
#include "insight/chart/chart.hpp"
#include "insight/error.hpp"
#include "insight/question/pipeline.hpp"
#include "insight/tisql/pipeline.hpp"
#include "insight/util/text.hpp"

namespace insight::service {

using nlohmann::json;

namespace {

constexpr std::string_view kOverviewQuestion = "get a quick understanding of this dataset";

// Position of a stage tag in pipeline order; the overview stage sorts first.
int stage_rank(std::string_view stage) {
  if (stage == kOverviewStage) return 0;
  for (std::size_t i = 0; i < std::size(kPipelineStages); ++i)
    if (kPipelineStages[i] == stage) return static_cast<int>(i) + 1;
  return -1;
}

json overview_of(const hdc::HierarchicalDataContext& h) {
  json tables = json::array();
  for (const auto& d : h.table_descriptions) {
    const auto* t = h.schema.find_table(d.table);
    tables.push_back({{"name", d.table},
                      {"entity", d.entity},
                      {"type", hdc::to_string(d.table_type)},
                      {"description", d.narrative},
                      {"primary_key", d.primary_key},
                      {"key_attributes", d.key_attributes},
                      {"row_count", t ? t->row_count_estimate : 0}});
  }
  json entities = json::array();
  for (const auto& e : h.entity_set.entities) entities.push_back({{"name", e.name}, {"tables", e.anchored_tables}});
  json rels = json::array();
  for (const auto& r : h.relationships)
    rels.push_back({{"from", r.from_table + "." + r.from_column}, {"to", r.to_table + "." + r.to_column}});
  return {{"database", h.schema.database_name},
          {"summary", h.database_summary.summary},
          {"keywords", h.database_summary.keywords},
          {"tables", tables},
          {"entities", entities},
          {"relationships", rels}};
}

}  // namespace

bool is_overview_question(std::string_view text) {
  auto t = util::to_lower(util::collapse_whitespace(text));
  while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.back()))) t.pop_back();
  return t == kOverviewQuestion;
}

void to_json(json& j, const SessionView& v) {
  j = v.session;
  j["state"] = to_string(v.state);
  j["state_error"] = v.state_error;
  j["turns"] = v.turns;
}

InsightService::InsightService(ServiceOptions options, std::shared_ptr<llm::Gateway> gateway)
    : options_(std::move(options)),
      gateway_(std::move(gateway)),
      store_((std::filesystem::create_directories(options_.state_dir), options_.state_dir / "state.db")) {
  options_.pipeline.validate();
  for (auto t : store_.turns_with_status(TurnStatus::running)) {
    t.status = TurnStatus::failed;
    t.error = tisql::TaskError{ErrorCode::InvalidArgument, "interrupted by service restart"};
    store_.update_turn(t);
  }
  for (auto& t : store_.turns_with_status(TurnStatus::awaiting_confirmation)) {
    busy_sessions_.insert(t.session_id);
    live_.emplace(t.id, t);
  }
  for (const auto& d : store_.datasets()) {
    bool stale = d.hdc_state == HdcState::generating ||
                 (d.hdc_state == HdcState::ready && !std::filesystem::exists(hdc_path(d.id)));
    if (stale) store_.update_dataset_state(d.id, HdcState::none, "");
  }
}

InsightService::~InsightService() {
  std::vector<std::jthread> jobs;
  {
    std::lock_guard lock(jobs_mu_);
    jobs.swap(jobs_);
  }
  jobs.clear();
}

void InsightService::spawn(std::function<void()> job) {
  std::lock_guard lock(jobs_mu_);
  jobs_.emplace_back(std::move(job));
}

std::filesystem::path InsightService::hdc_path(const std::string& dataset_id) const {
  return options_.state_dir / "hdc" / (dataset_id + ".json");
}

std::unique_ptr<catalog::SqlEngine> InsightService::open_guarded(const std::string& spec) const {
  catalog::EngineOptions eo;
  eo.statement_timeout = std::chrono::milliseconds(options_.pipeline.statement_timeout_ms);
  return std::make_unique<catalog::ReadOnlyGuard>(catalog::open_engine(spec, eo), *options_.mutation_counter);
}

Dataset InsightService::register_dataset(const std::string& connection_spec, const std::string& name) {
  auto trimmed = util::trim(name);
  if (trimmed.empty()) throw Error(ErrorCode::InvalidArgument, "dataset name is empty");
  for (const auto& d : store_.datasets())
    if (d.name == trimmed) throw Error(ErrorCode::NameConflict, "dataset name already registered: " + trimmed);
  std::unique_ptr<catalog::SqlEngine> engine;
  catalog::DatabaseSchema schema;
  try {
    engine = open_guarded(connection_spec);
    schema = engine->introspect();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConnectionFailed) throw;
    throw Error(ErrorCode::ConnectionFailed, "cannot introspect " + connection_spec + ": " + e.what());
  }
  Dataset d;
  d.name = trimmed;
  d.connection_spec = connection_spec;
  d.schema = std::move(schema);
  d.created_at = now_ms();
  d = store_.insert_dataset(std::move(d));
  std::lock_guard lock(mu_);
  runtimes_[d.id].engine = std::move(engine);
  return d;
}

std::vector<Dataset> InsightService::datasets() const { return store_.datasets(); }

Dataset InsightService::dataset(const std::string& id) const {
  auto d = store_.dataset(id);
  if (!d) throw Error(ErrorCode::UnknownDataset, "unknown dataset: " + id);
  return *d;
}

void InsightService::request_hdc(const std::string& dataset_id, const std::string& model_id) {
  auto d = dataset(dataset_id);
  {
    std::lock_guard lock(mu_);
    if (d.hdc_state == HdcState::ready || generating_.count(dataset_id)) return;
    generating_.insert(dataset_id);
    store_.update_dataset_state(dataset_id, HdcState::generating, "");
  }
  auto model = model_id.empty() ? gateway_->config().default_model : model_id;
  spawn([this, d, model] {
    HdcState state = HdcState::failed;
    std::string error;
    std::shared_ptr<hdc::HierarchicalDataContext> generated;
    std::shared_ptr<hdc::HdcIndex> index;
    try {
      auto engine = open_guarded(d.connection_spec);
      generated = std::make_shared<hdc::HierarchicalDataContext>(
          hdc::generate_hdc(d.schema, *engine, options_.pipeline, hdc::LlmContext{*gateway_, model}));
      catalog::persist_hdc(*generated, hdc_path(d.id));
      index = std::make_shared<hdc::HdcIndex>(hdc::build_index(*generated, options_.pipeline, *gateway_));
      state = HdcState::ready;
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(mu_);
    if (state == HdcState::ready) {
      auto& rt = runtimes_[d.id];
      rt.hdc = generated;
      rt.index = index;
    }
    store_.update_dataset_state(d.id, state, error);
    generating_.erase(d.id);
    changed_.notify_all();
  });
}

HdcState InsightService::wait_for_hdc(const std::string& dataset_id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  changed_.wait_for(lock, timeout, [&] { return !generating_.count(dataset_id); });
  auto d = store_.dataset(dataset_id);
  if (!d) throw Error(ErrorCode::UnknownDataset, "unknown dataset: " + dataset_id);
  return d->hdc_state;
}

InsightService::Runtime& InsightService::runtime(const std::string& dataset_id) {
  auto d = dataset(dataset_id);
  std::lock_guard lock(mu_);
  auto& rt = runtimes_[dataset_id];
  if (!rt.engine) rt.engine = open_guarded(d.connection_spec);
  if (!rt.hdc) {
    if (d.hdc_state != HdcState::ready)
      throw Error(ErrorCode::SessionNotReady, "dataset " + dataset_id + " has no HDC yet (" +
                                                  std::string(to_string(d.hdc_state)) + ")");
    auto loaded = std::make_shared<hdc::HierarchicalDataContext>(catalog::load_hdc(hdc_path(dataset_id)));
    rt.index = std::make_shared<hdc::HdcIndex>(hdc::build_index(*loaded, options_.pipeline, *gateway_));
    rt.hdc = std::move(loaded);
  }
  return rt;
}

hdc::HierarchicalDataContext InsightService::hdc_of(const std::string& dataset_id) {
  return *runtime(dataset_id).hdc;
}

Session InsightService::require_session(const std::string& session_id) const {
  auto s = store_.session(session_id);
  if (!s) throw Error(ErrorCode::UnknownSession, "unknown session: " + session_id);
  return *s;
}

SessionView InsightService::create_session(const std::string& dataset_id, const std::string& model_id) {
  auto d = dataset(dataset_id);
  auto model = model_id.empty() ? gateway_->config().default_model : model_id;
  if (!gateway_->knows_model(model)) throw Error(ErrorCode::UnknownModel, "model not configured: " + model);
  auto s = store_.insert_session(Session{"", dataset_id, model, now_ms()});
  if (d.hdc_state == HdcState::none || d.hdc_state == HdcState::failed) request_hdc(dataset_id, model);
  return session(s.id);
}

SessionView InsightService::session(const std::string& session_id) const {
  SessionView v;
  v.session = require_session(session_id);
  auto d = dataset(v.session.dataset_id);
  v.state = d.hdc_state;
  v.state_error = d.hdc_error;
  v.turns = store_.turns_of(session_id);
  std::lock_guard lock(mu_);
  for (auto& t : v.turns)
    if (auto it = live_.find(t.id); it != live_.end()) t = it->second;
  return v;
}

std::vector<Session> InsightService::sessions() const { return store_.sessions(); }

Session InsightService::set_model(const std::string& session_id, const std::string& model_id) {
  auto s = require_session(session_id);
  if (!gateway_->knows_model(model_id)) throw Error(ErrorCode::UnknownModel, "model not configured: " + model_id);
  store_.update_session_model(session_id, model_id);
  s.model_id = model_id;
  return s;
}

Turn InsightService::begin_turn(const std::string& session_id, const std::string& text) {
  auto s = require_session(session_id);
  auto raw = util::trim(text);
  if (raw.empty()) throw Error(ErrorCode::EmptyInput, "question is empty");
  auto d = dataset(s.dataset_id);
  if (d.hdc_state != HdcState::ready)
    throw Error(ErrorCode::SessionNotReady,
                "dataset HDC is " + std::string(to_string(d.hdc_state)) + "; questions are accepted once it is ready");
  std::lock_guard lock(mu_);
  if (busy_sessions_.count(session_id))
    throw Error(ErrorCode::SessionBusy, "session " + session_id + " already has a turn in flight");
  Turn t;
  t.session_id = session_id;
  t.question = question::UserQuestion{raw, session_id, s.model_id};
  t.status = TurnStatus::running;
  t.created_at = now_ms();
  t = store_.insert_turn(std::move(t));
  busy_sessions_.insert(session_id);
  live_.emplace(t.id, t);
  return t;
}

void InsightService::update_live(const Turn& t) {
  std::lock_guard lock(mu_);
  auto& live = live_[t.id];
  auto events = live.stage_events;
  live = t;
  live.stage_events = std::move(events);
  store_.update_turn(live);
  changed_.notify_all();
}

void InsightService::finish_turn(Turn t) {
  std::lock_guard lock(mu_);
  if (auto it = live_.find(t.id); it != live_.end()) {
    t.stage_events = it->second.stage_events;
    if (t.status == TurnStatus::awaiting_confirmation)
      it->second = t;
    else
      live_.erase(it);
  }
  if (t.status != TurnStatus::awaiting_confirmation) busy_sessions_.erase(t.session_id);
  store_.update_turn(t);
  changed_.notify_all();
}

void InsightService::run_turn(const std::string& turn_id, bool resume) {
  Turn t;
  {
    std::lock_guard lock(mu_);
    t = live_.at(turn_id);
  }
  auto stage = [this, turn_id](std::string_view tag) {
    std::lock_guard lock(mu_);
    auto it = live_.find(turn_id);
    if (it == live_.end()) return;
    auto& events = it->second.stage_events;
    if (!events.empty() && stage_rank(tag) <= stage_rank(events.back().stage)) return;
    auto at = std::max(now_ms(), events.empty() ? std::int64_t{0} : events.back().at);
    events.push_back({std::string(tag), at});
    store_.update_turn(it->second);
    changed_.notify_all();
  };

  try {
    auto s = require_session(t.session_id);
    auto& rt = runtime(s.dataset_id);
    const auto& h = *rt.hdc;
    const auto& cfg = options_.pipeline;
    hdc::LlmContext llm{*gateway_, t.question.model_id};

    if (is_overview_question(t.question.raw_text)) {
      stage(kOverviewStage);
      t.overview = overview_of(h);
      t.status = TurnStatus::done;
      finish_turn(std::move(t));
      return;
    }

    if (!resume) {
      stage("clarify");
      auto clarified = question::clarify(t.question, h, *gateway_);
      stage("decompose");
      clarified = question::decompose(std::move(clarified), h, cfg, llm);
      t.clarified = clarified;
      if (cfg.require_confirmation && !clarified.off_topic) {
        t.status = TurnStatus::awaiting_confirmation;
        finish_turn(std::move(t));
        return;
      }
      update_live(t);
    }

    const auto& clarified = *t.clarified;
    if (clarified.off_topic) {
      t.status = TurnStatus::done;
      finish_turn(std::move(t));
      return;
    }

    auto answers = tisql::answer_task(clarified, h, *rt.index, *rt.engine, cfg, llm, stage);
    stage("chart");
    std::vector<TurnResult> results;
    for (auto& a : answers) {
      TurnResult r{std::move(a), {}};
      if (r.answer.ok()) {
        try {
          auto sig = chart::classify_result(*r.answer.result);
          r.recommendations = chart::recommend(sig, *r.answer.result, r.answer.sub_task,
                                               cfg.chart_tiebreak ? &llm : nullptr);
        } catch (const Error& e) {
          r.answer.error = tisql::TaskError{e.code(), e.what()};
        }
      }
      results.push_back(std::move(r));
    }
    bool any_ok = std::any_of(results.begin(), results.end(), [](const TurnResult& r) { return r.answer.ok(); });
    if (any_ok) {
      t.results = std::move(results);
      t.status = TurnStatus::done;
    } else {
      for (auto& r : results) t.attempts.push_back(std::move(r.answer));
      t.error = t.attempts.empty() ? tisql::TaskError{ErrorCode::InvalidArgument, "no work items"}
                                   : *t.attempts.front().error;
      t.status = TurnStatus::failed;
    }
  } catch (const Error& e) {
    t.status = TurnStatus::failed;
    t.error = tisql::TaskError{e.code(), e.what()};
  } catch (const std::exception& e) {
    t.status = TurnStatus::failed;
    t.error = tisql::TaskError{ErrorCode::InvalidArgument, e.what()};
  }
  finish_turn(std::move(t));
}

Turn InsightService::post_question(const std::string& session_id, const std::string& text) {
  auto t = begin_turn(session_id, text);
  run_turn(t.id, false);
  return turn(session_id, t.id);
}

Turn InsightService::start_question(const std::string& session_id, const std::string& text) {
  auto t = begin_turn(session_id, text);
  spawn([this, id = t.id] { run_turn(id, false); });
  return t;
}

Turn InsightService::confirm_turn(const std::string& session_id, const std::string& turn_id, bool wait) {
  {
    std::lock_guard lock(mu_);
    auto it = live_.find(turn_id);
    if (it == live_.end() || it->second.session_id != session_id ||
        it->second.status != TurnStatus::awaiting_confirmation)
      throw Error(ErrorCode::UnknownTurn, "no turn awaiting confirmation: " + turn_id);
    it->second.status = TurnStatus::running;
    store_.update_turn(it->second);
  }
  if (wait) {
    run_turn(turn_id, true);
  } else {
    spawn([this, turn_id] { run_turn(turn_id, true); });
  }
  return turn(session_id, turn_id);
}

Turn InsightService::turn(const std::string& session_id, const std::string& turn_id) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = live_.find(turn_id); it != live_.end() && it->second.session_id == session_id) return it->second;
  }
  auto t = store_.turn(turn_id);
  if (!t || t->session_id != session_id) throw Error(ErrorCode::UnknownTurn, "unknown turn: " + turn_id);
  return *t;
}

Turn InsightService::wait_for_turn(const std::string& session_id, const std::string& turn_id,
                                   std::size_t seen_events, std::chrono::milliseconds timeout) const {
  {
    std::unique_lock lock(mu_);
    changed_.wait_for(lock, timeout, [&] {
      auto it = live_.find(turn_id);
      return it == live_.end() || it->second.stage_events.size() > seen_events ||
             it->second.status == TurnStatus::awaiting_confirmation;
    });
  }
  return turn(session_id, turn_id);
}

Bookmark InsightService::add_bookmark(const std::string& turn_id, std::size_t sub_task_index,
                                      const std::string& label) {
  auto t = store_.turn(turn_id);
  if (!t || t->status != TurnStatus::done)
    throw Error(ErrorCode::UnknownTurn, "no done turn with id " + turn_id + " (only finished results can be bookmarked)");
  if (sub_task_index >= t->results.size())
    throw Error(ErrorCode::IndexOutOfRange, "turn " + turn_id + " has " + std::to_string(t->results.size()) +
                                                " results; index " + std::to_string(sub_task_index) + " is out of range");
  if (!t->results[sub_task_index].answer.ok())
    throw Error(ErrorCode::IndexOutOfRange, "result " + std::to_string(sub_task_index) + " of turn " + turn_id +
                                                " failed and cannot be bookmarked");
  Bookmark b;
  b.session_id = t->session_id;
  b.turn_id = turn_id;
  b.sub_task_index = sub_task_index;
  b.label = label;
  b.created_at = now_ms();
  return store_.insert_bookmark(std::move(b));
}

std::vector<Bookmark> InsightService::list_bookmarks(const std::string& session_id) const {
  require_session(session_id);
  return store_.bookmarks_of(session_id);
}

json InsightService::compare(const std::vector<std::string>& bookmark_ids) const {
  json entries = json::array();
  for (const auto& id : bookmark_ids) {
    auto b = store_.bookmark(id);
    if (!b) throw Error(ErrorCode::UnknownBookmark, "unknown bookmark: " + id);
    auto t = store_.turn(b->turn_id);
    if (!t || b->sub_task_index >= t->results.size())
      throw Error(ErrorCode::UnknownTurn, "bookmark " + id + " references a missing result");
    const auto& r = t->results[b->sub_task_index];
    json e = r;
    e["bookmark"] = *b;
    e["turn_id"] = t->id;
    e["question"] = t->question.raw_text;
    entries.push_back(std::move(e));
  }
  return {{"entries", entries}};
}

}  // namespace insight::service
