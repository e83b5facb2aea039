#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "insight/catalog/engine.hpp"
#include "insight/hdc/config.hpp"
#include "insight/hdc/generator.hpp"
#include "insight/llm/gateway.hpp"
#include "insight/service/store.hpp"
#include "insight/service/types.hpp"

namespace insight::service {

struct ServiceOptions {
  std::filesystem::path state_dir;  // state.db and hdc/<dataset>.json live here
  hdc::PipelineConfig pipeline;
  // Counter observed by every dataset engine's read-only guard.
  catalog::MutationCounter* mutation_counter = &catalog::MutationCounter::global();
};

struct SessionView {
  Session session;
  HdcState state = HdcState::none;
  std::string state_error;
  std::vector<Turn> turns;
};

void to_json(nlohmann::json& j, const SessionView& v);

// True for the fixed "understand this dataset" question (case, spacing and
// trailing punctuation ignored).
bool is_overview_question(std::string_view text);

// Dataset registry, sessions, turn execution and bookmarks. All state goes
// through StateStore, so a new instance over the same state_dir resumes where
// the previous one stopped; turns that were running are marked failed.
class InsightService {
 public:
  InsightService(ServiceOptions options, std::shared_ptr<llm::Gateway> gateway);
  ~InsightService();

  InsightService(const InsightService&) = delete;
  InsightService& operator=(const InsightService&) = delete;

  // Introspects through a read-only connection and stores the schema.
  // Throws ConnectionFailed or NameConflict.
  Dataset register_dataset(const std::string& connection_spec, const std::string& name);
  std::vector<Dataset> datasets() const;
  Dataset dataset(const std::string& id) const;

  // Starts background HDC generation unless one is ready or running.
  void request_hdc(const std::string& dataset_id, const std::string& model_id = {});
  HdcState wait_for_hdc(const std::string& dataset_id, std::chrono::milliseconds timeout) const;
  // Throws SessionNotReady unless the dataset's HDC is ready.
  hdc::HierarchicalDataContext hdc_of(const std::string& dataset_id);

  // Throws UnknownDataset or UnknownModel. Triggers HDC generation if absent.
  SessionView create_session(const std::string& dataset_id, const std::string& model_id = {});
  SessionView session(const std::string& session_id) const;
  std::vector<Session> sessions() const;
  // Throws UnknownSession or UnknownModel.
  Session set_model(const std::string& session_id, const std::string& model_id);

  // Runs the turn to completion in the calling thread.
  Turn post_question(const std::string& session_id, const std::string& text);
  // Returns the running turn; execution continues on a background thread.
  Turn start_question(const std::string& session_id, const std::string& text);
  // Resumes a turn held for confirmation (require_confirmation).
  Turn confirm_turn(const std::string& session_id, const std::string& turn_id, bool wait = false);

  Turn turn(const std::string& session_id, const std::string& turn_id) const;
  // Blocks until the turn has more than `seen_events` stage events, finishes,
  // or the timeout passes; returns the current state.
  Turn wait_for_turn(const std::string& session_id, const std::string& turn_id, std::size_t seen_events,
                     std::chrono::milliseconds timeout) const;

  // Only results of done turns can be bookmarked. Throws UnknownTurn or
  // IndexOutOfRange.
  Bookmark add_bookmark(const std::string& turn_id, std::size_t sub_task_index, const std::string& label);
  std::vector<Bookmark> list_bookmarks(const std::string& session_id) const;
  // {entries: [{bookmark, turn_id, question, sub_task, sql, result, recommendations, chart}]} in request order.
  nlohmann::json compare(const std::vector<std::string>& bookmark_ids) const;

  llm::Gateway& gateway() { return *gateway_; }
  const hdc::PipelineConfig& pipeline_config() const { return options_.pipeline; }

 private:
  struct Runtime {
    std::unique_ptr<catalog::SqlEngine> engine;
    std::shared_ptr<const hdc::HierarchicalDataContext> hdc;
    std::shared_ptr<const hdc::HdcIndex> index;
  };

  std::filesystem::path hdc_path(const std::string& dataset_id) const;
  std::unique_ptr<catalog::SqlEngine> open_guarded(const std::string& spec) const;
  Runtime& runtime(const std::string& dataset_id);
  Session require_session(const std::string& session_id) const;
  Turn begin_turn(const std::string& session_id, const std::string& text);
  void run_turn(const std::string& turn_id, bool resume);
  void update_live(const Turn& t);
  void finish_turn(Turn t);
  void spawn(std::function<void()> job);

  ServiceOptions options_;
  std::shared_ptr<llm::Gateway> gateway_;
  StateStore store_;

  mutable std::mutex mu_;
  mutable std::condition_variable changed_;
  std::map<std::string, Runtime> runtimes_;
  std::map<std::string, Turn> live_;         // unfinished turns
  std::set<std::string> busy_sessions_;
  std::set<std::string> generating_;         // dataset ids

  std::mutex jobs_mu_;
  std::vector<std::jthread> jobs_;
};

}  // namespace insight::service
