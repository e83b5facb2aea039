#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "insight/catalog/engine.hpp"
#include "insight/hdc/config.hpp"
#include "insight/hdc/model.hpp"
#include "insight/llm/gateway.hpp"

namespace insight::testing {

std::filesystem::path fixture_path(const std::string& relative);

// Builds <name>.db from tests/fixtures/<name>.sql once per process, in a
// private temporary directory, and returns its path.
std::filesystem::path fixture_db(const std::string& name);
std::string fixture_spec(const std::string& name);

// Read-only engine over a fixture database behind a ReadOnlyGuard.
std::unique_ptr<catalog::SqlEngine> open_fixture(const std::string& name,
                                                 catalog::MutationCounter& counter = catalog::MutationCounter::global());

std::filesystem::path cassette_path(const std::string& name);

llm::GatewayConfig fixture_gateway_config();

// Replays a committed cassette; any miss is an error and nothing reaches a
// provider.
std::shared_ptr<llm::Gateway> replay_gateway(const std::string& cassette_name);

// Talks straight to the fixture model.
std::shared_ptr<llm::Gateway> fixture_gateway();

// Gateway over an arbitrary provider, passthrough mode.
std::shared_ptr<llm::Gateway> provider_gateway(std::shared_ptr<llm::Provider> provider,
                                               llm::GatewayConfig config = fixture_gateway_config());

// Generated once per process through the fixture model.
const hdc::HierarchicalDataContext& fixture_hdc(const std::string& name);

// Engine wrapper that logs every explain and scan in call order.
class RecordingEngine final : public catalog::SqlEngine {
 public:
  struct Call {
    std::string op;  // "explain" or "scan"
    std::string sql;
    bool ok = false;
  };

  explicit RecordingEngine(std::unique_ptr<catalog::SqlEngine> inner) : inner_(std::move(inner)) {}

  std::string dialect_id() const override { return inner_->dialect_id(); }
  catalog::DatabaseSchema introspect() override { return inner_->introspect(); }
  std::string explain(std::string_view sql) override;
  std::vector<catalog::ResultColumn> scan(std::string_view sql, const catalog::RowSink& sink) override;
  std::string quote_identifier(std::string_view name) const override { return inner_->quote_identifier(name); }

  std::vector<Call> calls() const;
  // Offending statement when some scan ran without a successful EXPLAIN of the
  // same text before it.
  std::optional<std::string> unexplained_scan() const;

 private:
  std::unique_ptr<catalog::SqlEngine> inner_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

// Removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Questions recorded into the committed cassettes.
inline constexpr const char* kGrowthQuestion = "What is the growth rate?";
inline constexpr const char* kOilQuestion = "How did oil prices change?";
inline constexpr const char* kFedQuestion = "Identify the impact of Federal Reserve interest rate hikes.";
inline constexpr const char* kBirdQuestion = "List each test result and its count in descending order of count.";

std::vector<std::string> cassette_names();

// Re-runs the scenario behind one committed cassette against the fixture
// model and returns the recording.
std::shared_ptr<llm::Cassette> record_scenario(const std::string& name);

}  // namespace insight::testing
