#include "insight/llm/types.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::llm {

namespace {
constexpr std::pair<Purpose, std::string_view> kPurposeNames[] = {
    {Purpose::column_summary, "column_summary"},
    {Purpose::table_description, "table_description"},
    {Purpose::relationship, "relationship"},
    {Purpose::entity, "entity"},
    {Purpose::db_summary, "db_summary"},
    {Purpose::clarify, "clarify"},
    {Purpose::decompose, "decompose"},
    {Purpose::schema_filter, "schema_filter"},
    {Purpose::sql_gen, "sql_gen"},
    {Purpose::refine, "refine"},
    {Purpose::chart_tiebreak, "chart_tiebreak"},
    {Purpose::embedding, "embedding"},
};

std::string format_temperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  return buf;
}
}  // namespace

std::string_view to_string(Purpose p) {
  for (const auto& [value, name] : kPurposeNames)
    if (value == p) return name;
  return "unknown";
}

Purpose purpose_from_string(std::string_view s) {
  for (const auto& [value, name] : kPurposeNames)
    if (name == s) return value;
  throw Error(ErrorCode::InvalidArgument, "unknown purpose tag: " + std::string(s));
}

double default_temperature(Purpose p) {
  switch (p) {
    case Purpose::column_summary:
    case Purpose::table_description:
    case Purpose::entity:
    case Purpose::db_summary:
      return 0.3;
    default:
      return 0.0;
  }
}

void LlmRequest::validate() const {
  if (messages.empty()) throw Error(ErrorCode::InvalidArgument, "request has no messages");
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw Error(ErrorCode::InvalidArgument, "temperature outside [0, 2]");
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension())
    throw Error(ErrorCode::DimensionMismatch, "cosine over vectors of different dimension");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string canonicalize(const LlmRequest& request) {
  // Hand-built so field order never depends on the JSON library's map order.
  std::string out = "{\"kind\":\"chat\",\"model\":";
  out += nlohmann::json(request.model_id).dump();
  out += ",\"purpose\":";
  out += nlohmann::json(std::string(to_string(request.purpose))).dump();
  out += ",\"temperature\":" + format_temperature(request.temperature);
  out += ",\"max_output_tokens\":" + std::to_string(request.max_output_tokens);
  out += ",\"messages\":[";
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (i) out += ",";
    out += "{\"role\":" + nlohmann::json(request.messages[i].role).dump();
    out += ",\"content\":" + nlohmann::json(util::collapse_whitespace(request.messages[i].content)).dump();
    out += "}";
  }
  out += "]}";
  return out;
}

std::string canonicalize_embedding(std::string_view model_id, std::string_view text) {
  std::string out = "{\"kind\":\"embedding\",\"model\":";
  out += nlohmann::json(std::string(model_id)).dump();
  out += ",\"input\":" + nlohmann::json(util::collapse_whitespace(text)).dump() + "}";
  return out;
}

std::string replay_key(std::string_view canonical) { return util::sha256_hex(canonical); }

std::size_t estimate_tokens(std::string_view text) {
  std::size_t tokens = 0;
  std::size_t run = 0;
  auto flush = [&] {
    tokens += (run + 3) / 4;
    run = 0;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = static_cast<unsigned char>(text[i]);
    if (c >= 0x80) {
      flush();
      if ((c & 0xC0) != 0x80) ++tokens;  // count lead bytes only
    } else if (std::isalnum(c)) {
      ++run;
    } else {
      flush();
      if (!std::isspace(c)) ++tokens;
    }
  }
  flush();
  return tokens;
}

std::size_t estimate_tokens(const LlmRequest& request) {
  std::size_t total = 0;
  for (const auto& m : request.messages) total += 4 + estimate_tokens(m.content);
  return total;
}

}  // namespace insight::llm
