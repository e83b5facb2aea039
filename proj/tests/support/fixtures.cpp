#include "fixtures.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include <sqlite3.h>
#include <unistd.h>

#include "fixture_model.hpp"
#include "insight/error.hpp"
#include "insight/hdc/generator.hpp"
#include "insight/service/service.hpp"

namespace insight::testing {

namespace {

std::filesystem::path process_dir() {
  static const auto dir = [] {
    auto d = std::filesystem::temp_directory_path() / ("insight-fixtures-" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

void build_db(const std::filesystem::path& sql_file, const std::filesystem::path& db_file) {
  std::ifstream in(sql_file);
  if (!in) throw Error(ErrorCode::IoFailure, "missing fixture " + sql_file.string());
  std::stringstream script;
  script << in.rdbuf();
  std::filesystem::remove(db_file);
  sqlite3* db = nullptr;
  if (sqlite3_open(db_file.c_str(), &db) != SQLITE_OK) {
    sqlite3_close(db);
    throw Error(ErrorCode::IoFailure, "cannot create " + db_file.string());
  }
  char* err = nullptr;
  int rc = sqlite3_exec(db, script.str().c_str(), nullptr, nullptr, &err);
  std::string message = err ? err : "";
  sqlite3_free(err);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw Error(ErrorCode::IoFailure, "fixture " + sql_file.string() + ": " + message);
}

std::shared_ptr<llm::Cassette> run_recording(const std::function<void(std::shared_ptr<llm::Gateway>)>& scenario) {
  auto cassette = std::make_shared<llm::Cassette>();
  auto gateway = std::make_shared<llm::Gateway>(fixture_gateway_config(), std::make_shared<FixtureProvider>(),
                                                cassette, llm::CassetteMode::record);
  scenario(gateway);
  return cassette;
}

void ask_all(std::shared_ptr<llm::Gateway> gateway, const std::string& dataset,
             const std::vector<std::string>& questions) {
  TempDir state;
  service::InsightService svc(service::ServiceOptions{state.path(), hdc::PipelineConfig{}}, gateway);
  auto ds = svc.register_dataset(fixture_spec(dataset), dataset);
  auto view = svc.create_session(ds.id);
  if (svc.wait_for_hdc(ds.id, std::chrono::seconds(60)) != service::HdcState::ready)
    throw Error(ErrorCode::PreconditionViolated, "fixture HDC generation did not finish: " + svc.dataset(ds.id).hdc_error);
  for (const auto& q : questions) svc.post_question(view.session.id, q);
}

void pairwise_relationships(std::shared_ptr<llm::Gateway> gateway) {
  // Descriptions come from a passthrough run so only the pairwise prompts
  // land in this recording.
  auto direct = fixture_gateway();
  auto engine = open_fixture("financial");
  hdc::PipelineConfig cfg;
  auto h = hdc::generate_hdc(engine->introspect(), *engine, cfg, hdc::LlmContext{*direct, "fixture-large"});
  hdc::LlmContext llm{*gateway, "fixture-large"};
  const auto& tables = h.schema.tables;
  for (std::size_t i = 0; i < tables.size(); ++i)
    for (std::size_t j = i + 1; j < tables.size(); ++j)
      gateway->complete_structured(
          hdc::relationship_request(h.schema, h.table_descriptions, tables[i].name, {tables[j].name}, llm),
          hdc::relationship_shape());
}

}  // namespace

std::filesystem::path fixture_path(const std::string& relative) {
  return std::filesystem::path(INSIGHT_FIXTURE_DIR) / relative;
}

std::filesystem::path fixture_db(const std::string& name) {
  static std::mutex mu;
  static std::map<std::string, std::filesystem::path> built;
  std::lock_guard lock(mu);
  if (auto it = built.find(name); it != built.end()) return it->second;
  auto db = process_dir() / (name + ".db");
  build_db(fixture_path(name + ".sql"), db);
  built.emplace(name, db);
  return db;
}

std::string fixture_spec(const std::string& name) { return "sqlite:" + fixture_db(name).string(); }

std::unique_ptr<catalog::SqlEngine> open_fixture(const std::string& name, catalog::MutationCounter& counter) {
  return std::make_unique<catalog::ReadOnlyGuard>(catalog::open_engine(fixture_spec(name)), counter);
}

const hdc::HierarchicalDataContext& fixture_hdc(const std::string& name) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<hdc::HierarchicalDataContext>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[name];
  if (!slot) {
    auto gw = fixture_gateway();
    auto engine = open_fixture(name);
    slot = std::make_unique<hdc::HierarchicalDataContext>(
        hdc::generate_hdc(engine->introspect(), *engine, hdc::PipelineConfig{}, hdc::LlmContext{*gw, "fixture-large"}));
  }
  return *slot;
}

std::string RecordingEngine::explain(std::string_view sql) {
  try {
    auto plan = inner_->explain(sql);
    std::lock_guard lock(mu_);
    calls_.push_back({"explain", std::string(sql), true});
    return plan;
  } catch (...) {
    std::lock_guard lock(mu_);
    calls_.push_back({"explain", std::string(sql), false});
    throw;
  }
}

std::vector<catalog::ResultColumn> RecordingEngine::scan(std::string_view sql, const catalog::RowSink& sink) {
  try {
    auto cols = inner_->scan(sql, sink);
    std::lock_guard lock(mu_);
    calls_.push_back({"scan", std::string(sql), true});
    return cols;
  } catch (...) {
    std::lock_guard lock(mu_);
    calls_.push_back({"scan", std::string(sql), false});
    throw;
  }
}

std::vector<RecordingEngine::Call> RecordingEngine::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::optional<std::string> RecordingEngine::unexplained_scan() const {
  std::lock_guard lock(mu_);
  std::set<std::string> explained;
  for (const auto& c : calls_) {
    if (c.op == "explain" && c.ok) explained.insert(c.sql);
    if (c.op == "scan" && !explained.count(c.sql)) return c.sql;
  }
  return std::nullopt;
}

std::filesystem::path cassette_path(const std::string& name) { return fixture_path("cassettes/" + name + ".jsonl"); }

llm::GatewayConfig fixture_gateway_config() {
  llm::GatewayConfig cfg;
  cfg.models = {"fixture-large", "fixture-small"};
  cfg.default_model = "fixture-large";
  cfg.embedding_model = "fixture-embed";
  return cfg;
}

std::shared_ptr<llm::Gateway> replay_gateway(const std::string& cassette_name) {
  auto path = cassette_path(cassette_name);
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoFailure, "missing cassette " + path.string());
  auto cassette = std::make_shared<llm::Cassette>(llm::Cassette::open(path));
  return std::make_shared<llm::Gateway>(fixture_gateway_config(), std::make_shared<PanicProvider>(), cassette,
                                        llm::CassetteMode::replay);
}

std::shared_ptr<llm::Gateway> fixture_gateway() { return provider_gateway(std::make_shared<FixtureProvider>()); }

std::shared_ptr<llm::Gateway> provider_gateway(std::shared_ptr<llm::Provider> provider, llm::GatewayConfig config) {
  return std::make_shared<llm::Gateway>(std::move(config), std::move(provider), nullptr,
                                        llm::CassetteMode::passthrough);
}

TempDir::TempDir() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = process_dir() / ("tmp-" + std::to_string(rng()));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw Error(ErrorCode::IoFailure, "cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<std::string> cassette_names() { return {"financial", "financial_pairwise", "bird"}; }

std::shared_ptr<llm::Cassette> record_scenario(const std::string& name) {
  if (name == "financial")
    return run_recording([](auto gw) { ask_all(gw, "financial", {kGrowthQuestion, kOilQuestion, kFedQuestion}); });
  if (name == "financial_pairwise") return run_recording(pairwise_relationships);
  if (name == "bird") return run_recording([](auto gw) { ask_all(gw, "bird", {kBirdQuestion}); });
  throw Error(ErrorCode::InvalidArgument, "unknown cassette scenario " + name);
}

}  // namespace insight::testing
