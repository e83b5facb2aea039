#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "insight/catalog/engine.hpp"
#include "insight/catalog/schema.hpp"

namespace insight::catalog {

// Seeded reservoir selection (Algorithm R over std::mt19937_64) across the
// table scanned in primary-key order, or all-columns order when no key is
// declared. Selected rows are returned in scan order.
SampledRows sample_rows(SqlEngine& engine, const DatabaseSchema& schema, std::string_view table,
                        std::size_t n, std::uint64_t seed);

}  // namespace insight::catalog
