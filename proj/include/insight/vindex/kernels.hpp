#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace insight::vindex::kernels {

// Row-major matrix of `rows` vectors of length `dim`, with each row's L2 norm
// precomputed in `norms`. Both kernels compute score[i] =
// dot(row_i, query) / (norms[i] * query_norm) with the same per-row operation
// order, so their outputs are bit-identical.
struct MatrixView {
  std::span<const double> data;
  std::span<const double> norms;
  std::size_t dim = 0;

  std::size_t rows() const { return norms.size(); }
};

double l2_norm(std::span<const double> v);

// Serial reference implementation.
void cosine_scores_serial(const MatrixView& m, std::span<const double> query, double query_norm,
                          std::span<double> out);

// OpenMP row-parallel implementation; falls back to one thread below
// `parallel_threshold` rows.
void cosine_scores_parallel(const MatrixView& m, std::span<const double> query, double query_norm,
                            std::span<double> out, std::size_t parallel_threshold = 512);

}  // namespace insight::vindex::kernels
