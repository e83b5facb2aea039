#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "insight/llm/types.hpp"

namespace insight::vindex {

struct IndexEntry {
  std::string id;
  llm::EmbeddingVector vector;
  std::string payload;
};

struct RankedHit {
  std::string id;
  double score = 0.0;

  bool operator==(const RankedHit&) const = default;
};

enum class ScanKernel { serial, parallel };

// Exact cosine top-k over an in-memory set of vectors. Hits are ordered by
// descending score, ties by ascending id. Readers run concurrently; upserts
// are exclusive.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dimension, ScanKernel kernel = ScanKernel::parallel);

  VectorIndex(const VectorIndex&) = delete;
  VectorIndex& operator=(const VectorIndex&) = delete;

  // Replaces an existing id. Throws DimensionMismatch or ZeroVector.
  void upsert(IndexEntry entry);

  std::vector<RankedHit> top_k(const llm::EmbeddingVector& query, std::size_t k,
                               const std::optional<std::string>& exclude = std::nullopt) const;

  std::size_t size() const;
  std::size_t dimension() const { return dim_; }
  std::optional<std::string> payload(const std::string& id) const;
  std::vector<std::string> ids() const;

  // Number of top_k calls served.
  std::size_t query_count() const { return queries_.load(); }
  void reset_query_count() { queries_.store(0); }

 private:
  std::size_t dim_;
  ScanKernel kernel_;
  mutable std::shared_mutex mu_;
  std::vector<std::string> ids_;
  std::vector<std::string> payloads_;
  std::vector<double> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> slot_;
  mutable std::atomic<std::size_t> queries_{0};
};

}  // namespace insight::vindex
