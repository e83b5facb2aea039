#include "insight/vindex/kernels.hpp"

#include <cmath>

namespace insight::vindex::kernels {

namespace {
inline double row_score(const MatrixView& m, std::size_t i, std::span<const double> query, double query_norm) {
  const double* row = m.data.data() + i * m.dim;
  double dot = 0.0;
  for (std::size_t d = 0; d < m.dim; ++d) dot += row[d] * query[d];
  return dot / (m.norms[i] * query_norm);
}
}  // namespace

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void cosine_scores_serial(const MatrixView& m, std::span<const double> query, double query_norm,
                          std::span<double> out) {
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = row_score(m, i, query, query_norm);
}

void cosine_scores_parallel(const MatrixView& m, std::span<const double> query, double query_norm,
                            std::span<double> out, std::size_t parallel_threshold) {
  const auto n = static_cast<std::ptrdiff_t>(m.rows());
#pragma omp parallel for schedule(static) if (m.rows() >= parallel_threshold)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = row_score(m, static_cast<std::size_t>(i), query, query_norm);
}

}  // namespace insight::vindex::kernels
