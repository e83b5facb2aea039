#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "insight/hdc/config.hpp"
#include "insight/llm/cassette.hpp"
#include "insight/llm/gateway.hpp"
#include "insight/llm/provider.hpp"

namespace insight::service {

inline constexpr const char* kApiKeyEnv = "INSIGHT_LLM_KEY";

struct DatasetConfig {
  std::string name;
  std::string engine;  // connection spec, e.g. sqlite:data/financial.db
};

// JSON config file:
// {
//   "state_dir": "state",
//   "listen": {"host": "127.0.0.1", "port": 8080},
//   "engine": "sqlite:financial.db",            // or "datasets": [{"name", "engine"}]
//   "provider": {"base_url": "...", "models": [...], "default_model": "...",
//                "embedding_model": "...", "context_window": 8192,
//                "max_in_flight": 4, "timeout_s": 60},
//   "cassette": {"path": "run.jsonl", "mode": "record|replay|passthrough"},
//   "pipeline": { PipelineConfig fields }
// }
// Relative paths resolve against the config file's directory. The provider
// key is read from INSIGHT_LLM_KEY, never from the file.
struct ServiceConfig {
  std::filesystem::path state_dir = "insight-state";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<DatasetConfig> datasets;
  llm::GatewayConfig gateway;
  std::string provider_base_url;
  std::chrono::seconds provider_timeout{60};
  std::optional<std::filesystem::path> cassette_path;
  llm::CassetteMode cassette_mode = llm::CassetteMode::passthrough;
  hdc::PipelineConfig pipeline;
};

ServiceConfig parse_service_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
// Throws IoFailure or InvalidArgument.
ServiceConfig load_service_config(const std::filesystem::path& path);

// What clients may see: models, pipeline values, provider URL. No key.
nlohmann::json public_config(const ServiceConfig& cfg);

// Gateway per config. `provider` replaces the HTTP provider when given.
std::shared_ptr<llm::Gateway> make_gateway(const ServiceConfig& cfg, std::shared_ptr<llm::Provider> provider = {});

}  // namespace insight::service
