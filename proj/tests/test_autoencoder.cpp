// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "delius/autoencoder.hpp"
#include "support/synthetic.hpp"

using namespace delius;
using namespace delius::ae;

TEST_CASE("build mirrors the encoder") {
  Rng rng(1);
  AutoencoderSpec spec;
  const auto model = build(spec, rng);
  CHECK(model.chain() ==
        std::vector<std::size_t>{1024, 500, 500, 2000, 10, 2000, 500, 500, 1024});
  CHECK(model.encoder.layers.back().activation == nn::Activation::Identity);
  CHECK(model.encoder.layers.front().activation == nn::Activation::Relu);
  CHECK(model.decoder.layers.back().activation == nn::Activation::Identity);

  std::size_t expected = 0;
  const auto chain = model.chain();
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) expected += chain[i + 1] * chain[i] + chain[i + 1];
  CHECK(model.parameter_count() == expected);
  CHECK(expected == 2u * (1024 * 500 + 500 * 500 + 500 * 2000 + 2000 * 10) +
                        (500 + 500 + 2000 + 10) + (2000 + 500 + 500 + 1024));

  AutoencoderSpec tiny;
  tiny.input_dim = 4;
  tiny.encoder_dims = {2};
  CHECK(build(tiny, rng).chain() == std::vector<std::size_t>{4, 2, 4});
}

TEST_CASE("spec validation") {
  AutoencoderSpec spec;
  spec.epochs = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.epochs = 1;
  spec.batch_size = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.batch_size = 1;
  spec.encoder_dims = {};
  CHECK_THROWS_AS(spec.validate(), Error);
}

// With N(0, 0.01^2) weights the network first settles on predicting the data
// mean (loss ~41 here) and only leaves that plateau after ~150 epochs of
// 3 minibatches each; 300 epochs gives a clear margin.
TEST_CASE("pretraining on separated blobs halves the reconstruction loss") {
  const auto data = delius::testing::make_blobs(600, 32, 3, 10.0, 0.5, 5);
  AutoencoderSpec spec;
  spec.input_dim = 32;
  spec.encoder_dims = {64, 64, 128, 2};
  spec.epochs = 300;
  Rng rng(7);
  auto model = build(spec, rng);
  const auto report = pretrain(model, data.x, spec, rng);
  REQUIRE(report.loss_curve.size() == 300);
  for (double l : report.loss_curve) CHECK(std::isfinite(l));
  CHECK(report.final_loss < report.loss_curve.front() / 2.0);
  CHECK(report.seed == 7);

  SUBCASE("same seed, same curve") {
    Rng again(7);
    auto model2 = build(spec, again);
    const auto report2 = pretrain(model2, data.x, spec, again);
    CHECK(report2.loss_curve == report.loss_curve);
  }
}

TEST_CASE("linear autoencoder with full-width latent reconstructs tiny data") {
  const Matrix x = delius::testing::random_matrix(8, 4, 3);
  AutoencoderSpec spec;
  spec.input_dim = 4;
  spec.encoder_dims = {4};
  spec.batch_size = 8;
  spec.epochs = 3000;
  spec.optimizer.learning_rate = 1e-2;
  Rng rng(2);
  auto model = build(spec, rng);
  CHECK(model.encoder.layers[0].activation == nn::Activation::Identity);
  const auto report = pretrain(model, x, spec, rng);
  CHECK(report.final_loss < 1e-3);
  CHECK(nn::mse_loss(reconstruct(model, x), x) < 1e-3);
}

TEST_CASE("non-finite loss aborts with the last good parameters") {
  AutoencoderSpec spec;
  spec.input_dim = 3;
  spec.encoder_dims = {2};
  spec.epochs = 2;
  Rng rng(1);
  auto model = build(spec, rng);
  const auto before = model;
  const Matrix x = Matrix::Constant(4, 3, 1e160);
  try {
    pretrain(model, x, spec, rng);
    FAIL("expected PretrainAborted");
  } catch (const PretrainAborted& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
    CHECK(e.epoch() == 0);
    CHECK(e.last_good().encoder.layers[0].weights == before.encoder.layers[0].weights);
  }
}

TEST_CASE("encode") {
  AutoencoderSpec spec;
  spec.input_dim = 6;
  spec.encoder_dims = {5, 3};
  Rng r1(4), r2(4);
  const auto m1 = build(spec, r1);
  const auto m2 = build(spec, r2);
  Matrix x = delius::testing::random_matrix(10, 6, 11, 50.0);
  x.row(7) = x.row(2);

  const Matrix z = encode(m1.encoder, x);
  CHECK(z.rows() == 10);
  CHECK(z.cols() == 3);
  CHECK(z == encode(m2.encoder, x));
  CHECK(z.row(7) == z.row(2));
  CHECK(z == nn::forward(m1.encoder, x).output());

  // Row permutation commutes with encoding.
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(10);
  perm.setIdentity();
  Rng rng(5);
  std::span<int> idx(perm.indices().data(), 10);
  rng.shuffle(idx);
  const Matrix zp = encode(m1.encoder, perm * x);
  CHECK(((perm * z) - zp).cwiseAbs().maxCoeff() <= 1e-12 * z.cwiseAbs().maxCoeff());

  CHECK_THROWS_AS(encode(m1.encoder, Matrix::Ones(2, 5)), Error);
}
