// SPDX-License-Identifier: Apache-2.0
#include "delius/baselines.hpp"

#include "delius/dec.hpp"
#include "delius/error.hpp"
#include "delius/projection.hpp"

namespace delius::baselines {

const char* to_string(Strategy s) noexcept {
  return s == Strategy::PcaKmeans ? "pca_kmeans" : "ae_kmeans";
}

namespace {

void finish(BaselineRun& run, metrics::LabelSet truth) {
  run.report = metrics::evaluate(run.reduced, run.kmeans.labels, to_string(run.strategy), truth);
  run.report.k = run.k;
  run.report.strategy = to_string(run.strategy);
  run.report.seed = run.seed;
}

}  // namespace

BaselineRun run_pca_kmeans(const Matrix& features, std::size_t k, std::size_t r, std::uint64_t seed,
                           metrics::LabelSet truth, kmeans::KmeansConfig config) {
  require(r <= static_cast<std::size_t>(features.cols()), ErrorKind::Config,
          "PCA rank exceeds the feature dimension");
  BaselineRun run;
  run.strategy = Strategy::PcaKmeans;
  run.k = k;
  run.seed = seed;
  const auto model = projection::pca_fit(features, r);
  run.reduced = projection::pca_transform(model, features);
  run.space_dim = r;
  config.k = k;
  Rng rng(seed);
  run.kmeans = kmeans::kmeans_fit(run.reduced, config, rng);
  finish(run, truth);
  return run;
}

BaselineRun run_ae_kmeans(const Matrix& features, const nn::Mlp& encoder, std::size_t k,
                          std::uint64_t seed, metrics::LabelSet truth,
                          kmeans::KmeansConfig config) {
  BaselineRun run;
  run.strategy = Strategy::AeKmeans;
  run.k = k;
  run.seed = seed;
  config.k = k;
  Rng rng(seed);
  auto init = dec::initial_clustering(encoder, features, config, rng);
  run.reduced = std::move(init.z);
  run.space_dim = static_cast<std::size_t>(run.reduced.cols());
  run.kmeans = std::move(init.kmeans);
  finish(run, truth);
  return run;
}

}  // namespace delius::baselines
