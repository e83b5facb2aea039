#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace insight::catalog {

// Removes -- line comments and /* */ block comments outside string literals
// and quoted identifiers.
std::string strip_sql_comments(std::string_view sql);

// Splits on top-level semicolons; empty statements are dropped.
std::vector<std::string> split_statements(std::string_view sql);

// True iff `sql` is exactly one statement that begins with SELECT or WITH
// (after comment stripping) and contains no data- or schema-modifying keyword
// outside literals.
bool is_read_only_statement(std::string_view sql);

}  // namespace insight::catalog
