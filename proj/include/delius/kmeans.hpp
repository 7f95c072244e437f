// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "delius/rng.hpp"
#include "delius/types.hpp"

namespace delius::kmeans {

struct KmeansConfig {
  std::size_t k = 2;
  std::size_t restarts = 20;
  std::size_t max_iters = 300;
  double tol = 1e-6;  // on the largest centroid displacement
};

struct KmeansResult {
  Matrix centroids;  // k x m
  Labels labels;
  double inertia = 0.0;
  std::size_t restarts_run = 0;
  std::size_t best_restart_index = 0;
  std::size_t iterations = 0;           // Lloyd iterations of the best restart
  std::vector<double> inertia_history;  // best restart, after every assignment step
  KmeansConfig config;
};

/// Nearest centroid by squared Euclidean distance, ties to the lowest index.
Labels assign(const Matrix& points, const Matrix& centroids);

double inertia(const Matrix& points, const Matrix& centroids, const Labels& labels);

/// Lloyd iterations from k-means++ seeding, repeated `restarts` times; keeps
/// the lowest-inertia restart (earliest on ties). Per-restart seeds are drawn
/// from `rng` before any restart runs.
KmeansResult kmeans_fit(const Matrix& points, const KmeansConfig& config, Rng& rng);

}  // namespace delius::kmeans
