#include "insight/llm/cassette.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::llm {

std::string_view to_string(CassetteMode m) {
  switch (m) {
    case CassetteMode::record: return "record";
    case CassetteMode::replay: return "replay";
    case CassetteMode::passthrough: return "passthrough";
  }
  return "replay";
}

CassetteMode cassette_mode_from_string(std::string_view s) {
  if (s == "record") return CassetteMode::record;
  if (s == "replay") return CassetteMode::replay;
  if (s == "passthrough") return CassetteMode::passthrough;
  throw Error(ErrorCode::InvalidArgument, "unknown cassette mode: " + std::string(s));
}

namespace {

std::string entry_line(const CassetteEntry& entry) {
  nlohmann::json j = {{"replay_key", entry.replay_key},
                      {"purpose_tag", entry.purpose_tag},
                      {"request_canonical", entry.request_canonical},
                      {"response_text", entry.response_text},
                      {"token_usage", {{"prompt", entry.token_usage.prompt}, {"completion", entry.token_usage.completion}}}};
  return j.dump();
}

}  // namespace

Cassette Cassette::open(const std::filesystem::path& path) {
  Cassette c;
  c.path_ = path;
  std::ifstream in(path);
  if (!in) return c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::IoFailure,
                  path.string() + ":" + std::to_string(lineno) + ": bad cassette line: " + e.what());
    }
    CassetteEntry e;
    e.replay_key = j.at("replay_key").get<std::string>();
    e.purpose_tag = j.at("purpose_tag").get<std::string>();
    e.request_canonical = j.at("request_canonical").get<std::string>();
    e.response_text = j.at("response_text").get<std::string>();
    if (j.contains("token_usage")) {
      e.token_usage.prompt = j["token_usage"].value("prompt", std::int64_t{0});
      e.token_usage.completion = j["token_usage"].value("completion", std::int64_t{0});
    }
    if (c.by_key_.count(e.replay_key)) continue;
    c.by_key_.emplace(e.replay_key, c.order_.size());
    c.order_.push_back(std::move(e));
  }
  return c;
}

Cassette::Cassette(Cassette&& other) noexcept {
  std::lock_guard lock(other.mu_);
  path_ = std::move(other.path_);
  order_ = std::move(other.order_);
  by_key_ = std::move(other.by_key_);
}

Cassette& Cassette::operator=(Cassette&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    path_ = std::move(other.path_);
    order_ = std::move(other.order_);
    by_key_ = std::move(other.by_key_);
  }
  return *this;
}

std::optional<CassetteEntry> Cassette::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return order_[it->second];
}

void Cassette::append(CassetteEntry entry) {
  std::lock_guard lock(mu_);
  if (by_key_.count(entry.replay_key)) return;
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot append to cassette " + path_->string());
    out << entry_line(entry) << '\n';
  }
  by_key_.emplace(entry.replay_key, order_.size());
  order_.push_back(std::move(entry));
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

std::map<std::string, std::size_t> Cassette::count_by_purpose() const {
  std::lock_guard lock(mu_);
  std::map<std::string, std::size_t> out;
  for (const auto& e : order_) ++out[e.purpose_tag];
  return out;
}

std::vector<CassetteEntry> Cassette::entries() const {
  std::lock_guard lock(mu_);
  return order_;
}

void Cassette::save(const std::filesystem::path& path) const {
  auto sorted = entries();
  std::sort(sorted.begin(), sorted.end(),
            [](const CassetteEntry& a, const CassetteEntry& b) { return a.replay_key < b.replay_key; });
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write cassette " + path.string());
    for (const auto& e : sorted) out << entry_line(e) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace insight::llm
