#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "insight/service/types.hpp"

struct sqlite3;

namespace insight::service {

// Durable service state in a local SQLite file: datasets, sessions, turns
// (as JSON documents) and bookmarks. Ids are prefix + sequence number
// (ds_1, s_1, t_1, b_1). Thread-safe.
class StateStore {
 public:
  explicit StateStore(const std::filesystem::path& path);
  ~StateStore();

  StateStore(const StateStore&) = delete;
  StateStore& operator=(const StateStore&) = delete;

  // Assigns id; throws NameConflict for a duplicate name.
  Dataset insert_dataset(Dataset d);
  void update_dataset_state(const std::string& id, HdcState state, const std::string& error);
  std::optional<Dataset> dataset(const std::string& id) const;
  std::vector<Dataset> datasets() const;

  Session insert_session(Session s);
  void update_session_model(const std::string& id, const std::string& model_id);
  std::optional<Session> session(const std::string& id) const;
  std::vector<Session> sessions() const;

  // Assigns id and seq.
  Turn insert_turn(Turn t);
  void update_turn(const Turn& t);
  std::optional<Turn> turn(const std::string& id) const;
  std::vector<Turn> turns_of(const std::string& session_id) const;
  std::vector<Turn> turns_with_status(TurnStatus status) const;

  Bookmark insert_bookmark(Bookmark b);
  std::optional<Bookmark> bookmark(const std::string& id) const;
  std::vector<Bookmark> bookmarks_of(const std::string& session_id) const;

 private:
  void exec(const std::string& sql);

  mutable std::mutex mu_;
  sqlite3* db_ = nullptr;
};

}  // namespace insight::service
