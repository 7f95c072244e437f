// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "delius/types.hpp"

namespace delius::projection {

struct PcaModel {
  RowVector mean;              // d
  Matrix components;           // r x d, orthonormal rows
  Vector explained_variance;   // r, descending
  double total_variance = 0.0; // trace of the sample covariance
};

/// Top-r principal directions of the centered data from the symmetric
/// eigendecomposition of the sample covariance. Each component is signed so
/// that its largest-magnitude coordinate is positive.
PcaModel pca_fit(const Matrix& points, std::size_t r);

Matrix pca_transform(const PcaModel& model, const Matrix& points);
Matrix pca_inverse(const PcaModel& model, const Matrix& reduced);

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch_iter = 250;
  std::uint64_t seed = 0;
};

/// Symmetrized input affinities (sum to 1). Each conditional row uses the
/// Gaussian bandwidth whose entropy matches log(perplexity) to within 1e-5,
/// found by at most 50 bisection steps.
Matrix tsne_affinities(const Matrix& points, double perplexity);

/// KL(P || Q) of a 2-D layout and its gradient w.r.t. the coordinates,
/// with P scaled by `exaggeration`.
double tsne_cost(const Matrix& p, const Matrix& y);
Matrix tsne_gradient(const Matrix& p, const Matrix& y, double exaggeration = 1.0);

/// Exact O(n^2) t-SNE to two dimensions.
Matrix tsne_embed(const Matrix& points, const TsneConfig& config);

}  // namespace delius::projection
