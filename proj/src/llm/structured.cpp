#include "insight/llm/structured.hpp"

#include "insight/error.hpp"
#include "insight/util/text.hpp"

namespace insight::llm {

namespace {

std::string_view kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::text: return "string";
    case FieldKind::text_list: return "array of strings";
    case FieldKind::boolean: return "boolean";
    case FieldKind::integer: return "integer";
    case FieldKind::list: return "array";
    case FieldKind::object: return "object";
  }
  return "value";
}

bool kind_matches(const nlohmann::json& v, FieldKind k) {
  switch (k) {
    case FieldKind::text: return v.is_string();
    case FieldKind::boolean: return v.is_boolean();
    case FieldKind::integer: return v.is_number_integer();
    case FieldKind::list: return v.is_array();
    case FieldKind::object: return v.is_object();
    case FieldKind::text_list:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_string()) return false;
      return true;
  }
  return false;
}

std::optional<std::string> check_shape(const nlohmann::json& v, const Shape& shape) {
  if (!v.is_object()) return "top-level value is not an object";
  for (const auto& f : shape.fields) {
    if (!v.contains(f.name)) {
      if (f.required) return "missing field \"" + f.name + "\"";
      continue;
    }
    if (!kind_matches(v[f.name], f.kind))
      return "field \"" + f.name + "\" is not " + std::string(kind_name(f.kind));
  }
  return std::nullopt;
}

// Balanced {...} starting at `start`, honouring string literals.
std::optional<std::string_view> balanced_object(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '{') ++depth;
    if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
  }
  return std::nullopt;
}

}  // namespace

std::string Shape::describe() const {
  std::string out = "a single JSON object with fields: ";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + fields[i].name + "\" (" + std::string(kind_name(fields[i].kind));
    if (!fields[i].required) out += ", optional";
    out += ")";
  }
  return out;
}

std::optional<nlohmann::json> extract_structure(std::string_view text, const Shape& shape,
                                                const Validator& validator, std::string* problem) {
  std::string last_problem = "no JSON object found";
  auto accept = [&](const nlohmann::json& v) -> bool {
    if (auto p = check_shape(v, shape)) {
      last_problem = *p;
      return false;
    }
    if (validator) {
      if (auto p = validator(v)) {
        last_problem = *p;
        return false;
      }
    }
    return true;
  };

  std::string stripped = util::strip_code_fences(text);
  auto whole = nlohmann::json::parse(stripped, nullptr, false);
  if (!whole.is_discarded() && accept(whole)) return whole;

  std::string_view body(text);
  for (std::size_t pos = body.find('{'); pos != std::string_view::npos; pos = body.find('{', pos + 1)) {
    auto candidate = balanced_object(body, pos);
    if (!candidate) continue;
    auto v = nlohmann::json::parse(*candidate, nullptr, false);
    if (v.is_discarded()) continue;
    if (accept(v)) return v;
  }
  if (problem) *problem = last_problem;
  return std::nullopt;
}

nlohmann::json parse_structured(const LlmExchange& exchange, const Shape& shape,
                                const Validator& validator) {
  if (!exchange.response_text) throw Error(ErrorCode::MalformedOutput, "exchange has no response");
  std::string problem;
  auto v = extract_structure(*exchange.response_text, shape, validator, &problem);
  if (!v) throw Error(ErrorCode::MalformedOutput, "unparseable " + std::string(to_string(exchange.request.purpose)) +
                                                      " response: " + problem);
  return *v;
}

}  // namespace insight::llm
