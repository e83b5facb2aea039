#include "insight/service/config.hpp"

#include <cstdlib>
#include <fstream>

#include "insight/error.hpp"

namespace insight::service {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string resolve_engine(const std::filesystem::path& base, const std::string& spec) {
  constexpr std::string_view kSqlite = "sqlite:";
  if (spec.rfind(kSqlite, 0) == 0) return std::string(kSqlite) + resolve(base, spec.substr(kSqlite.size())).string();
  return spec;
}

}  // namespace

ServiceConfig parse_service_config(const json& j, const std::filesystem::path& base_dir) {
  try {
    ServiceConfig c;
    if (j.contains("state_dir")) c.state_dir = resolve(base_dir, j["state_dir"].get<std::string>());
    else if (!base_dir.empty()) c.state_dir = base_dir / c.state_dir;
    if (j.contains("listen")) {
      c.host = j["listen"].value("host", c.host);
      c.port = j["listen"].value("port", c.port);
    }
    if (j.contains("engine")) {
      auto spec = resolve_engine(base_dir, j["engine"].get<std::string>());
      auto colon = spec.find(':');
      c.datasets.push_back({std::filesystem::path(spec.substr(colon + 1)).stem().string(), spec});
    }
    for (const auto& d : j.value("datasets", json::array()))
      c.datasets.push_back({d.at("name").get<std::string>(), resolve_engine(base_dir, d.at("engine").get<std::string>())});
    if (j.contains("provider")) {
      const auto& p = j["provider"];
      c.provider_base_url = p.value("base_url", std::string{});
      c.gateway.models = p.value("models", c.gateway.models);
      if (c.gateway.models.empty()) throw Error(ErrorCode::InvalidArgument, "provider.models is empty");
      c.gateway.default_model = p.value("default_model", c.gateway.models.front());
      c.gateway.embedding_model = p.value("embedding_model", c.gateway.embedding_model);
      c.gateway.context_window = p.value("context_window", c.gateway.context_window);
      c.gateway.max_in_flight = p.value("max_in_flight", c.gateway.max_in_flight);
      c.provider_timeout = std::chrono::seconds(p.value("timeout_s", 60));
    }
    if (j.contains("cassette")) {
      const auto& k = j["cassette"];
      if (k.contains("path")) c.cassette_path = resolve(base_dir, k["path"].get<std::string>());
      c.cassette_mode = llm::cassette_mode_from_string(k.value("mode", std::string("replay")));
    }
    if (j.contains("pipeline")) c.pipeline = j["pipeline"].get<hdc::PipelineConfig>();
    c.pipeline.validate();
    if (c.gateway.models.empty()) throw Error(ErrorCode::InvalidArgument, "provider.models is empty");
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad service config: ") + e.what());
  }
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "config " + path.string() + " is not JSON: " + e.what());
  }
  return parse_service_config(j, std::filesystem::absolute(path).parent_path());
}

json public_config(const ServiceConfig& cfg) {
  return {{"models", cfg.gateway.models},
          {"default_model", cfg.gateway.default_model},
          {"embedding_model", cfg.gateway.embedding_model},
          {"provider_base_url", cfg.provider_base_url},
          {"cassette_mode", to_string(cfg.cassette_mode)},
          {"pipeline", cfg.pipeline},
          {"starter_questions",
           {"Get a quick understanding of this dataset", "Which tables hold the most records?",
            "What are the main entities in this database?"}}};
}

std::shared_ptr<llm::Gateway> make_gateway(const ServiceConfig& cfg, std::shared_ptr<llm::Provider> provider) {
  std::shared_ptr<llm::Cassette> cassette;
  if (cfg.cassette_path) cassette = std::make_shared<llm::Cassette>(llm::Cassette::open(*cfg.cassette_path));
  else if (cfg.cassette_mode != llm::CassetteMode::passthrough)
    throw Error(ErrorCode::InvalidArgument, "cassette mode needs cassette.path");
  if (!provider && cfg.cassette_mode != llm::CassetteMode::replay) {
    if (cfg.provider_base_url.empty()) throw Error(ErrorCode::InvalidArgument, "provider.base_url is required");
    const char* key = std::getenv(kApiKeyEnv);
    provider = std::make_shared<llm::HttpProvider>(
        llm::HttpProviderConfig{cfg.provider_base_url, key ? key : "", cfg.provider_timeout});
  }
  return std::make_shared<llm::Gateway>(cfg.gateway, std::move(provider), std::move(cassette), cfg.cassette_mode);
}

}  // namespace insight::service
