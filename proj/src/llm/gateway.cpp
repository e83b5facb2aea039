#include "insight/llm/gateway.hpp"

#include <algorithm>
#include <cmath>

#include "insight/error.hpp"

namespace insight::llm {

namespace {

class InFlightSlot {
 public:
  explicit InFlightSlot(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~InFlightSlot() { sem_.release(); }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

std::ptrdiff_t clamp_in_flight(std::size_t n) {
  return static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(n, 1, 1024));
}

}  // namespace

Gateway::Gateway(GatewayConfig config, std::shared_ptr<Provider> provider,
                 std::shared_ptr<Cassette> cassette, CassetteMode mode)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      cassette_(std::move(cassette)),
      mode_(mode),
      in_flight_(clamp_in_flight(config_.max_in_flight)) {
  if (mode_ != CassetteMode::passthrough && !cassette_)
    throw Error(ErrorCode::InvalidArgument, "record/replay mode needs a cassette");
  if (mode_ != CassetteMode::replay && !provider_)
    throw Error(ErrorCode::InvalidArgument, "record/passthrough mode needs a provider");
}

bool Gateway::knows_model(const std::string& model_id) const {
  return std::find(config_.models.begin(), config_.models.end(), model_id) != config_.models.end();
}

LlmRequest Gateway::make_request(Purpose purpose, const std::string& model_id, std::string system,
                                 std::string user, std::size_t max_output_tokens) const {
  LlmRequest r;
  r.model_id = model_id.empty() ? config_.default_model : model_id;
  r.purpose = purpose;
  r.temperature = default_temperature(purpose);
  r.max_output_tokens = max_output_tokens;
  r.messages.push_back({"system", std::move(system)});
  r.messages.push_back({"user", std::move(user)});
  return r;
}

void Gateway::note(const LlmExchange& exchange, bool provider_call) {
  std::lock_guard lock(mu_);
  ++stats_.completions[exchange.request.purpose];
  if (provider_call)
    ++stats_.provider_calls;
  else
    ++stats_.cassette_hits;
  log_.push_back(exchange);
}

LlmExchange Gateway::complete(const LlmRequest& request) {
  request.validate();
  if (!knows_model(request.model_id))
    throw Error(ErrorCode::UnknownModel, "model not configured: " + request.model_id);
  auto budget = config_.context_window > request.max_output_tokens
                    ? config_.context_window - request.max_output_tokens
                    : 0;
  if (auto need = estimate_tokens(request); need > budget)
    throw Error(ErrorCode::BudgetExceeded, std::string(to_string(request.purpose)) + " prompt needs ~" +
                                               std::to_string(need) + " tokens, budget is " +
                                               std::to_string(budget));

  LlmExchange ex;
  ex.request = request;
  std::string canonical = canonicalize(request);
  ex.replay_key = replay_key(canonical);

  if (mode_ != CassetteMode::passthrough) {
    if (auto hit = cassette_->find(ex.replay_key)) {
      ex.response_text = hit->response_text;
      ex.token_usage = hit->token_usage;
      ex.from_cassette = true;
      note(ex, false);
      return ex;
    }
    if (mode_ == CassetteMode::replay)
      throw Error(ErrorCode::CassetteMiss, "no cassette entry for " + std::string(to_string(request.purpose)) +
                                               " request " + ex.replay_key);
  }

  auto start = std::chrono::steady_clock::now();
  ProviderReply reply;
  {
    InFlightSlot slot(in_flight_);
    reply = provider_->complete(request);
  }
  ex.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  ex.response_text = reply.text;
  ex.token_usage = reply.usage;
  if (mode_ == CassetteMode::record)
    cassette_->append({ex.replay_key, std::string(to_string(request.purpose)), canonical, reply.text, reply.usage});
  note(ex, true);
  return ex;
}

EmbeddingVector Gateway::embed(const std::string& text) {
  if (text.empty() || text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error(ErrorCode::EmptyInput, "cannot embed empty text");
  std::string canonical = canonicalize_embedding(config_.embedding_model, text);
  std::string key = replay_key(canonical);

  auto finish = [&](std::vector<double> values, bool provider_call) {
    for (double v : values)
      if (!std::isfinite(v)) throw Error(ErrorCode::ProviderError, "embedding has non-finite values");
    if (values.empty()) throw Error(ErrorCode::ProviderError, "embedding is empty");
    std::lock_guard lock(mu_);
    ++stats_.embeddings;
    if (provider_call)
      ++stats_.provider_calls;
    else
      ++stats_.cassette_hits;
    return EmbeddingVector{std::move(values)};
  };

  if (mode_ != CassetteMode::passthrough) {
    if (auto hit = cassette_->find(key)) {
      auto j = nlohmann::json::parse(hit->response_text, nullptr, false);
      if (j.is_discarded() || !j.is_array())
        throw Error(ErrorCode::MalformedOutput, "cassette embedding entry is not an array: " + key);
      return finish(j.get<std::vector<double>>(), false);
    }
    if (mode_ == CassetteMode::replay)
      throw Error(ErrorCode::CassetteMiss, "no cassette entry for embedding " + key);
  }

  std::vector<double> values;
  {
    InFlightSlot slot(in_flight_);
    values = provider_->embed(config_.embedding_model, text);
  }
  if (mode_ == CassetteMode::record)
    cassette_->append({key, std::string(to_string(Purpose::embedding)), canonical, nlohmann::json(values).dump(), {}});
  return finish(std::move(values), true);
}

nlohmann::json Gateway::complete_structured(const LlmRequest& request, const Shape& shape,
                                            const Validator& validator) {
  auto first = complete(request);
  std::string problem;
  if (auto v = extract_structure(*first.response_text, shape, validator, &problem)) return *v;

  LlmRequest repair = request;
  repair.messages.push_back({"assistant", *first.response_text});
  repair.messages.push_back({"user", "Your previous answer could not be used (" + problem +
                                         "). Return only the requested structure: " + shape.describe() +
                                         ". No prose, no code fences."});
  auto second = complete(repair);
  if (auto v = extract_structure(*second.response_text, shape, validator, &problem)) return *v;
  throw Error(ErrorCode::MalformedOutput, std::string(to_string(request.purpose)) +
                                              " output unusable after one repair attempt: " + problem);
}

CallStats Gateway::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void Gateway::reset_stats() {
  std::lock_guard lock(mu_);
  stats_ = {};
  log_.clear();
}

std::vector<LlmExchange> Gateway::exchanges() const {
  std::lock_guard lock(mu_);
  return log_;
}

}  // namespace insight::llm
