#include "insight/catalog/hdc_store.hpp"

#include <fstream>
#include <sstream>

#include "insight/error.hpp"

namespace insight::catalog {

void persist_hdc(const hdc::HierarchicalDataContext& hdc, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out << hdc::serialize(hdc) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot move HDC into place at " + path.string() + ": " + ec.message());
}

hdc::HierarchicalDataContext load_hdc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw Error(ErrorCode::IoFailure, path.string() + " is not a JSON document");
  return hdc::from_document(doc);
}

}  // namespace insight::catalog
