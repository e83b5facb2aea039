#include "insight/catalog/sql_text.hpp"

#include <array>
#include <cctype>

#include "insight/util/text.hpp"

namespace insight::catalog {

namespace {

// Calls on_code(i) for every index outside literals/quoted identifiers and
// comments; on_other(i) for the rest. Returns nothing, purely a lexer walk.
template <class Code, class Other>
void walk(std::string_view s, Code&& on_code, Other&& on_other) {
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
      while (i < s.size() && s[i] != '\n') on_other(i++, true);
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      on_other(i++, true);
      on_other(i++, true);
      while (i < s.size() && !(s[i] == '*' && i + 1 < s.size() && s[i + 1] == '/')) on_other(i++, true);
      if (i < s.size()) {
        on_other(i++, true);
        on_other(i++, true);
      }
      continue;
    }
    if (c == '\'' || c == '"' || c == '`' || c == '[') {
      char close = c == '[' ? ']' : c;
      on_other(i++, false);
      while (i < s.size()) {
        if (s[i] == close) {
          if (close != ']' && i + 1 < s.size() && s[i + 1] == close) {
            on_other(i++, false);
            on_other(i++, false);
            continue;
          }
          on_other(i++, false);
          break;
        }
        on_other(i++, false);
      }
      continue;
    }
    on_code(i++);
  }
}

constexpr std::array<std::string_view, 14> kMutating = {
    "insert", "update", "delete", "replace", "drop",  "create", "alter",
    "attach", "detach", "pragma", "vacuum", "reindex", "truncate", "merge"};

}  // namespace

std::string strip_sql_comments(std::string_view sql) {
  std::string out;
  out.reserve(sql.size());
  walk(
      sql, [&](std::size_t i) { out.push_back(sql[i]); },
      [&](std::size_t i, bool comment) {
        if (!comment) {
          out.push_back(sql[i]);
        } else if (sql[i] == '\n') {
          out.push_back('\n');
        } else if (out.empty() || out.back() != ' ') {
          out.push_back(' ');
        }
      });
  return out;
}

std::vector<std::string> split_statements(std::string_view sql) {
  std::string stripped = strip_sql_comments(sql);
  std::vector<std::string> out;
  std::string cur;
  walk(
      stripped,
      [&](std::size_t i) {
        if (stripped[i] == ';') {
          auto t = util::trim(cur);
          if (!t.empty()) out.push_back(t);
          cur.clear();
        } else {
          cur.push_back(stripped[i]);
        }
      },
      [&](std::size_t i, bool) { cur.push_back(stripped[i]); });
  auto t = util::trim(cur);
  if (!t.empty()) out.push_back(t);
  return out;
}

bool is_read_only_statement(std::string_view sql) {
  auto statements = split_statements(sql);
  if (statements.size() != 1) return false;
  const std::string& stmt = statements.front();

  struct Word {
    std::string text;
    std::size_t end;
  };
  std::vector<Word> words;
  std::string cur;
  auto flush = [&](std::size_t at) {
    if (!cur.empty()) words.push_back({util::to_lower(cur), at});
    cur.clear();
  };
  walk(
      stmt,
      [&](std::size_t i) {
        char c = stmt[i];
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
          cur.push_back(c);
        else
          flush(i);
      },
      [&](std::size_t i, bool) { flush(i); });
  flush(stmt.size());

  if (words.empty() || (words.front().text != "select" && words.front().text != "with")) return false;
  for (const auto& w : words) {
    // replace(x, a, b) and friends are scalar functions, not statements.
    std::size_t j = w.end;
    while (j < stmt.size() && std::isspace(static_cast<unsigned char>(stmt[j]))) ++j;
    if (j < stmt.size() && stmt[j] == '(') continue;
    for (auto m : kMutating)
      if (w.text == m) return false;
  }
  return true;
}

}  // namespace insight::catalog
