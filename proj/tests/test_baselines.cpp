// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>

#include "delius/autoencoder.hpp"
#include "delius/baselines.hpp"
#include "delius/dec.hpp"
#include "delius/kmeans.hpp"
#include "delius/metrics.hpp"
#include "support/synthetic.hpp"

using namespace delius;
using namespace delius::baselines;

TEST_CASE("strategy names") {
  CHECK(std::strcmp(to_string(Strategy::PcaKmeans), "pca_kmeans") == 0);
  CHECK(std::strcmp(to_string(Strategy::AeKmeans), "ae_kmeans") == 0);
}

TEST_CASE("PCA + k-means") {
  const auto data = delius::testing::make_blobs(300, 20, 3, 10.0, 0.5, 1);
  const auto run = run_pca_kmeans(data.x, 3, 2, 42, metrics::LabelSet{data.labels, {}});
  CHECK(run.strategy == Strategy::PcaKmeans);
  CHECK(run.report.space_tag == "pca_kmeans");
  CHECK(*run.report.strategy == "pca_kmeans");
  CHECK(*run.report.seed == 42);
  CHECK(run.report.k == 3);
  CHECK(run.space_dim == 2);
  CHECK(run.reduced.cols() == 2);
  CHECK(*run.report.acc_style == 1.0);
  CHECK(metrics::clustering_accuracy(data.labels, run.kmeans.labels) == 1.0);

  SUBCASE("deterministic") {
    const auto again = run_pca_kmeans(data.x, 3, 2, 42);
    CHECK(again.kmeans.labels == run.kmeans.labels);
    CHECK(again.reduced == run.reduced);
  }
  SUBCASE("r = d is plain k-means on centered data") {
    const auto small = delius::testing::make_blobs(120, 5, 4, 3.0, 1.0, 2);
    const auto full = run_pca_kmeans(small.x, 4, 5, 7);
    Matrix centered = small.x.rowwise() - small.x.colwise().mean();
    Rng rng(7);
    const auto plain = kmeans::kmeans_fit(centered, {4, 20, 300, 1e-6}, rng);
    CHECK(full.kmeans.labels == plain.labels);
  }
}

TEST_CASE("AE + k-means matches the DEC initialization") {
  const auto data = delius::testing::make_blobs(300, 16, 3, 10.0, 0.5, 3);
  ae::AutoencoderSpec spec;
  spec.input_dim = 16;
  spec.encoder_dims = {32, 32, 64, 3};
  spec.epochs = 200;
  Rng rng(4);
  auto model = ae::build(spec, rng);
  ae::pretrain(model, data.x, spec, rng);

  const auto run = run_ae_kmeans(data.x, model.encoder, 3, 99, metrics::LabelSet{data.labels, {}});
  CHECK(run.strategy == Strategy::AeKmeans);
  CHECK(run.report.space_tag == "ae_kmeans");
  CHECK(run.space_dim == 3);
  CHECK(*run.report.acc_style == 1.0);

  dec::DecConfig cfg;
  cfg.k = 3;
  cfg.max_iterations = 0;
  Rng dec_rng(99);
  const auto dec_run = dec::dec_fit(data.x, model.encoder, cfg, dec_rng);
  CHECK(dec_run.initial_labels == run.kmeans.labels);

  const auto again = run_ae_kmeans(data.x, model.encoder, 3, 99);
  CHECK(again.kmeans.labels == run.kmeans.labels);
  CHECK(again.report.sc == run.report.sc);
}
