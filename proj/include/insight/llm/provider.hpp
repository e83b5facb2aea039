#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "insight/llm/types.hpp"

namespace insight::llm {

struct ProviderReply {
  std::string text;
  TokenUsage usage;
};

// A chat-completion and embedding backend.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply complete(const LlmRequest& request) = 0;
  virtual std::vector<double> embed(const std::string& model_id, const std::string& text) = 0;
};

struct HttpProviderConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;   // usually from INSIGHT_LLM_KEY
  std::chrono::seconds timeout{60};
};

// OpenAI-style HTTP API: POST {base}/chat/completions and {base}/embeddings.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);

  ProviderReply complete(const LlmRequest& request) override;
  std::vector<double> embed(const std::string& model_id, const std::string& text) override;

 private:
  std::string post(const std::string& path, const std::string& body);

  HttpProviderConfig config_;
  std::string origin_;
  std::string path_prefix_;
};

}  // namespace insight::llm
