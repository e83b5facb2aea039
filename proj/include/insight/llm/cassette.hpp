#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "insight/llm/types.hpp"

namespace insight::llm {

enum class CassetteMode { record, replay, passthrough };

std::string_view to_string(CassetteMode m);
CassetteMode cassette_mode_from_string(std::string_view s);

struct CassetteEntry {
  std::string replay_key;
  std::string purpose_tag;
  std::string request_canonical;
  std::string response_text;
  TokenUsage token_usage;
};

// Append-only JSON-lines store keyed by replay key. When bound to a file every
// new entry is appended as one line immediately.
class Cassette {
 public:
  Cassette() = default;

  // Loads every line of `path`; a missing file yields an empty cassette bound
  // to that path. Later duplicates of a key are ignored.
  static Cassette open(const std::filesystem::path& path);

  std::optional<CassetteEntry> find(const std::string& key) const;
  void append(CassetteEntry entry);

  std::size_t size() const;
  std::map<std::string, std::size_t> count_by_purpose() const;
  std::vector<CassetteEntry> entries() const;
  const std::optional<std::filesystem::path>& path() const { return path_; }

  // Writes every entry to `path` ordered by replay key, so the same set of
  // exchanges always yields the same file.
  void save(const std::filesystem::path& path) const;

  Cassette(Cassette&& other) noexcept;
  Cassette& operator=(Cassette&& other) noexcept;

 private:
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> path_;
  std::vector<CassetteEntry> order_;
  std::map<std::string, std::size_t> by_key_;
};

}  // namespace insight::llm
