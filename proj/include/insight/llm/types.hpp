#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace insight::llm {

enum class Purpose {
  column_summary,
  table_description,
  relationship,
  entity,
  db_summary,
  clarify,
  decompose,
  schema_filter,
  sql_gen,
  refine,
  chart_tiebreak,
  embedding,
};

std::string_view to_string(Purpose p);
Purpose purpose_from_string(std::string_view s);

// 0 where correctness matters, 0.3 for free-text summaries.
double default_temperature(Purpose p);

struct Message {
  std::string role;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct LlmRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  std::size_t max_output_tokens = 1024;
  Purpose purpose = Purpose::clarify;

  // Throws InvalidArgument on empty messages or temperature outside [0, 2].
  void validate() const;
};

struct TokenUsage {
  std::int64_t prompt = 0;
  std::int64_t completion = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct LlmExchange {
  LlmRequest request;
  std::optional<std::string> response_text;
  TokenUsage token_usage;
  std::chrono::milliseconds latency{0};
  std::string replay_key;
  bool from_cassette = false;
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Stable textual form of a request: fixed field order, whitespace runs in
// message content collapsed, no latency or provider metadata.
std::string canonicalize(const LlmRequest& request);
std::string canonicalize_embedding(std::string_view model_id, std::string_view text);

// Hex SHA-256 of the canonical form.
std::string replay_key(std::string_view canonical);

// Character-class token estimate: alphanumeric runs count one token per four
// characters (rounded up), each other visible ASCII symbol counts one, each
// non-ASCII code point counts one, whitespace is free.
std::size_t estimate_tokens(std::string_view text);
std::size_t estimate_tokens(const LlmRequest& request);

}  // namespace insight::llm
