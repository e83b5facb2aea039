#pragma once

#include <filesystem>

#include "insight/hdc/model.hpp"

namespace insight::catalog {

// Writes the versioned HDC document atomically (temp file + rename).
void persist_hdc(const hdc::HierarchicalDataContext& hdc, const std::filesystem::path& path);

// Throws IoFailure or VersionMismatch.
hdc::HierarchicalDataContext load_hdc(const std::filesystem::path& path);

}  // namespace insight::catalog
