#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "insight/llm/types.hpp"

namespace insight::llm {

enum class FieldKind { text, text_list, boolean, integer, list, object };

struct FieldSpec {
  std::string name;
  FieldKind kind;
  bool required = true;
};

struct Shape {
  std::vector<FieldSpec> fields;

  // One-line description used in prompts and in the repair re-prompt.
  std::string describe() const;
};

// Extra semantic check on an otherwise well-shaped value; returns a problem
// description or nullopt.
using Validator = std::function<std::optional<std::string>(const nlohmann::json&)>;

// Finds the first JSON object in `text` (bare, fenced or embedded in prose)
// that satisfies `shape` and `validator`. On failure, `problem` describes the
// last rejection.
std::optional<nlohmann::json> extract_structure(std::string_view text, const Shape& shape,
                                                const Validator& validator = {},
                                                std::string* problem = nullptr);

// Single-attempt parse of an exchange; throws MalformedOutput.
nlohmann::json parse_structured(const LlmExchange& exchange, const Shape& shape,
                                const Validator& validator = {});

}  // namespace insight::llm
