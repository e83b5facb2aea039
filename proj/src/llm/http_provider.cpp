#include <httplib.h>

#include <json.hpp>

#include "insight/error.hpp"
#include "insight/llm/provider.hpp"

namespace insight::llm {

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "provider base URL needs a scheme: " + config_.base_url);
  auto path_start = config_.base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    origin_ = config_.base_url;
  } else {
    origin_ = config_.base_url.substr(0, path_start);
    path_prefix_ = config_.base_url.substr(path_start);
  }
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpProvider::post(const std::string& path, const std::string& body) {
  httplib::Client client(origin_);
  auto secs = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  auto res = client.Post(path_prefix_ + path, headers, body, "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
      throw Error(ErrorCode::Timeout, "provider request timed out: " + httplib::to_string(err));
    throw Error(ErrorCode::ProviderError, "provider transport error: " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw Error(ErrorCode::ProviderError,
                "provider returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
  return res->body;
}

ProviderReply HttpProvider::complete(const LlmRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json body = {{"model", request.model_id},
                         {"messages", messages},
                         {"temperature", request.temperature},
                         {"max_tokens", request.max_output_tokens}};
  auto raw = post("/chat/completions", body.dump());
  try {
    auto j = nlohmann::json::parse(raw);
    ProviderReply reply;
    reply.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      reply.usage.prompt = j["usage"].value("prompt_tokens", std::int64_t{0});
      reply.usage.completion = j["usage"].value("completion_tokens", std::int64_t{0});
    }
    return reply;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("unexpected completion payload: ") + e.what());
  }
}

std::vector<double> HttpProvider::embed(const std::string& model_id, const std::string& text) {
  nlohmann::json body = {{"model", model_id}, {"input", text}};
  auto raw = post("/embeddings", body.dump());
  try {
    auto j = nlohmann::json::parse(raw);
    return j.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("unexpected embedding payload: ") + e.what());
  }
}

}  // namespace insight::llm
