// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "delius/kmeans.hpp"
#include "delius/metrics.hpp"
#include "delius/neural.hpp"

namespace delius::baselines {

enum class Strategy { PcaKmeans, AeKmeans };

const char* to_string(Strategy s) noexcept;  // "pca_kmeans" / "ae_kmeans"

struct BaselineRun {
  Strategy strategy = Strategy::PcaKmeans;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t space_dim = 0;
  Matrix reduced;  // points in the space the clustering ran in
  kmeans::KmeansResult kmeans;
  metrics::EvalReport report;
};

/// k-means (20 restarts by default) in the top-r principal subspace.
BaselineRun run_pca_kmeans(const Matrix& features, std::size_t k, std::size_t r, std::uint64_t seed,
                           metrics::LabelSet truth = {},
                           kmeans::KmeansConfig config = {0, 20, 300, 1e-6});

/// k-means in the latent space of a pretrained encoder, through the same
/// code path the joint optimization uses for its initial centroids.
BaselineRun run_ae_kmeans(const Matrix& features, const nn::Mlp& encoder, std::size_t k,
                          std::uint64_t seed, metrics::LabelSet truth = {},
                          kmeans::KmeansConfig config = {0, 20, 300, 1e-6});

}  // namespace delius::baselines
