// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "delius/kmeans.hpp"
#include "delius/neural.hpp"

namespace delius::dec {

/// Student-t (one degree of freedom) membership of each embedded point in
/// each cluster: q_ij proportional to 1 / (1 + ||z_i - mu_j||^2).
/// Throws Degenerate when two centroids are closer than 1e-12.
Matrix soft_assign(const Matrix& z, const Matrix& centroids);

/// Sharpened target: p_ij proportional to q_ij^2 / f_j, f_j = sum_i q_ij.
Matrix target_distribution(const Matrix& q);

/// sum_ij p_ij log(p_ij / q_ij), with 0 log 0 = 0.
double kl_loss(const Matrix& p, const Matrix& q);

struct KlGradients {
  Matrix z;          // n x m
  Matrix centroids;  // k x m
};

/// Gradients of kl_loss(p, soft_assign(z, centroids)) with p held fixed.
KlGradients kl_grads(const Matrix& z, const Matrix& centroids, const Matrix& p);

/// Row-wise argmax, ties to the lowest column.
Labels hard_labels(const Matrix& q);

struct DecConfig {
  std::size_t k = 2;
  std::size_t update_interval = 140;  // minibatch steps between target refreshes
  double delta = 0.001;               // stop when changed fraction drops below this
  std::size_t batch_size = 256;
  std::size_t max_iterations = 20000;
  nn::AdamConfig optimizer;
  kmeans::KmeansConfig init{2, 20, 300, 1e-6};

  void validate() const;
};

struct AssignmentState {
  Matrix q;
  Matrix p;
  Labels hard;
  Labels last_hard;  // labels at the previous refresh
  std::size_t iter = 0;
};

struct RefreshRecord {
  std::size_t refresh_index = 0;
  std::size_t iter = 0;
  // Full-data KL of the current Q against the target frozen at the previous
  // refresh (the objective optimized since then). Refresh 0 uses its own P.
  double kl_full = 0.0;
  // Full-data KL against the freshly recomputed target.
  double kl_refreshed = 0.0;
  // Fraction of samples whose hard label changed since the previous refresh;
  // NaN on the first refresh.
  double changed_fraction = std::numeric_limits<double>::quiet_NaN();
};

struct InitialClustering {
  Matrix z;
  kmeans::KmeansResult kmeans;
};

/// Encodes all features and runs k-means in the latent space. Shared by the
/// joint optimization and the AE+k-means baseline.
InitialClustering initial_clustering(const nn::Mlp& encoder, const Matrix& features,
                                     const kmeans::KmeansConfig& config, Rng& rng);

struct DecResult {
  nn::Mlp encoder;
  Matrix centroids;
  AssignmentState state;
  std::vector<RefreshRecord> history;
  bool converged = false;
  Labels initial_labels;
  kmeans::KmeansResult init;
};

using RefreshCallback = std::function<void(const RefreshRecord&)>;

/// Joint optimization of encoder weights and centroids against a target
/// distribution refreshed on the full data every `update_interval` steps.
/// The first draw from `rng` goes to the k-means initialization, so the
/// initial labels equal those of `initial_clustering` with an equal seed.
DecResult dec_fit(const Matrix& features, nn::Mlp encoder, const DecConfig& config, Rng& rng,
                  const RefreshCallback& on_refresh = {});

}  // namespace delius::dec
