#include "insight/vindex/index.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "insight/error.hpp"
#include "insight/vindex/kernels.hpp"

namespace insight::vindex {

VectorIndex::VectorIndex(std::size_t dimension, ScanKernel kernel) : dim_(dimension), kernel_(kernel) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "index dimension must be positive");
}

void VectorIndex::upsert(IndexEntry entry) {
  const auto& v = entry.vector.values;
  if (v.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch, "vector for " + entry.id + " has dimension " +
                                                  std::to_string(v.size()) + ", index expects " +
                                                  std::to_string(dim_));
  for (double x : v)
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite vector for " + entry.id);
  double norm = kernels::l2_norm(v);
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "zero vector for " + entry.id);

  std::unique_lock lock(mu_);
  auto it = slot_.find(entry.id);
  if (it != slot_.end()) {
    std::size_t s = it->second;
    std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(s * dim_));
    norms_[s] = norm;
    payloads_[s] = std::move(entry.payload);
    return;
  }
  slot_.emplace(entry.id, ids_.size());
  ids_.push_back(std::move(entry.id));
  payloads_.push_back(std::move(entry.payload));
  data_.insert(data_.end(), v.begin(), v.end());
  norms_.push_back(norm);
}

std::vector<RankedHit> VectorIndex::top_k(const llm::EmbeddingVector& query, std::size_t k,
                                          const std::optional<std::string>& exclude) const {
  queries_.fetch_add(1);
  if (k == 0) return {};
  if (query.dimension() != dim_)
    throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(query.dimension()));
  double qnorm = kernels::l2_norm(query.values);
  if (qnorm == 0.0) throw Error(ErrorCode::ZeroVector, "zero query vector");

  std::shared_lock lock(mu_);
  if (ids_.empty()) throw Error(ErrorCode::EmptyIndex, "top_k on an empty index");

  std::vector<double> scores(ids_.size());
  kernels::MatrixView m{data_, norms_, dim_};
  if (kernel_ == ScanKernel::parallel)
    kernels::cosine_scores_parallel(m, query.values, qnorm, scores);
  else
    kernels::cosine_scores_serial(m, query.values, qnorm, scores);

  std::vector<std::size_t> order;
  order.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (!exclude || ids_[i] != *exclude) order.push_back(i);
  std::size_t take = std::min(k, order.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids_[a] < ids_[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);

  std::vector<RankedHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    hits.push_back({ids_[order[i]], std::clamp(scores[order[i]], -1.0, 1.0)});
  return hits;
}

std::size_t VectorIndex::size() const {
  std::shared_lock lock(mu_);
  return ids_.size();
}

std::optional<std::string> VectorIndex::payload(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = slot_.find(id);
  if (it == slot_.end()) return std::nullopt;
  return payloads_[it->second];
}

std::vector<std::string> VectorIndex::ids() const {
  std::shared_lock lock(mu_);
  return ids_;
}

}  // namespace insight::vindex
