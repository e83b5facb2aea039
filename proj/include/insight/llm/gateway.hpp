#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "insight/llm/cassette.hpp"
#include "insight/llm/provider.hpp"
#include "insight/llm/structured.hpp"
#include "insight/llm/types.hpp"

namespace insight::llm {

struct GatewayConfig {
  std::vector<std::string> models{"default"};
  std::string default_model = "default";
  std::string embedding_model = "default-embedding";
  std::size_t context_window = 8192;
  std::size_t max_in_flight = 4;
};

struct CallStats {
  std::map<Purpose, std::size_t> completions;
  std::size_t embeddings = 0;
  std::size_t provider_calls = 0;
  std::size_t cassette_hits = 0;

  std::size_t calls(Purpose p) const {
    auto it = completions.find(p);
    return it == completions.end() ? 0 : it->second;
  }
};

// Single entry point for every model call. Shareable across threads.
class Gateway {
 public:
  // `provider` may be null in replay mode; `cassette` may be null in
  // passthrough mode.
  Gateway(GatewayConfig config, std::shared_ptr<Provider> provider, std::shared_ptr<Cassette> cassette,
          CassetteMode mode);

  LlmExchange complete(const LlmRequest& request);
  EmbeddingVector embed(const std::string& text);

  // Completes, parses and validates; on failure issues exactly one repair
  // re-prompt before throwing MalformedOutput.
  nlohmann::json complete_structured(const LlmRequest& request, const Shape& shape,
                                     const Validator& validator = {});

  // system + user message request with the purpose's default temperature.
  LlmRequest make_request(Purpose purpose, const std::string& model_id, std::string system,
                          std::string user, std::size_t max_output_tokens = 1024) const;

  bool knows_model(const std::string& model_id) const;
  const GatewayConfig& config() const { return config_; }
  CassetteMode mode() const { return mode_; }

  CallStats stats() const;
  void reset_stats();

  // Every completion exchange issued since construction (or reset_stats).
  std::vector<LlmExchange> exchanges() const;

 private:
  void note(const LlmExchange& exchange, bool provider_call);

  GatewayConfig config_;
  std::shared_ptr<Provider> provider_;
  std::shared_ptr<Cassette> cassette_;
  CassetteMode mode_;
  std::counting_semaphore<1024> in_flight_;

  mutable std::mutex mu_;
  CallStats stats_;
  std::vector<LlmExchange> log_;
};

}  // namespace insight::llm
