// SPDX-License-Identifier: Apache-2.0
#include "delius/autoencoder.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace delius::ae {

void AutoencoderSpec::validate() const {
  require(input_dim >= 1, ErrorKind::Config, "input dimension must be >= 1");
  require(!encoder_dims.empty(), ErrorKind::Config, "encoder needs at least one layer");
  for (auto d : encoder_dims) require(d >= 1, ErrorKind::Config, "encoder widths must be >= 1");
  require(batch_size >= 1, ErrorKind::Config, "batch size must be >= 1");
  require(epochs >= 1, ErrorKind::Config, "epochs must be >= 1");
  require(optimizer.learning_rate >= 0.0 && optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 &&
              optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0 && optimizer.epsilon > 0.0,
          ErrorKind::Config, "invalid Adam hyperparameters");
  require(init_stddev > 0.0, ErrorKind::Config, "initialization stddev must be positive");
}

std::vector<std::size_t> Autoencoder::chain() const {
  auto out = encoder.dims();
  const auto dec = decoder.dims();
  out.insert(out.end(), dec.begin() + 1, dec.end());
  return out;
}

Autoencoder build(const AutoencoderSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<std::size_t> enc_dims{spec.input_dim};
  enc_dims.insert(enc_dims.end(), spec.encoder_dims.begin(), spec.encoder_dims.end());
  std::vector<std::size_t> dec_dims(enc_dims.rbegin(), enc_dims.rend());

  auto activations = [](std::size_t layers) {
    std::vector<nn::Activation> acts(layers, nn::Activation::Relu);
    acts.back() = nn::Activation::Identity;
    return acts;
  };
  Autoencoder model;
  model.encoder = nn::init_params(enc_dims, activations(enc_dims.size() - 1), rng, spec.init_stddev);
  model.decoder = nn::init_params(dec_dims, activations(dec_dims.size() - 1), rng, spec.init_stddev);
  return model;
}

PretrainReport pretrain(Autoencoder& model, const Matrix& features, const AutoencoderSpec& spec,
                        Rng& rng, const EpochCallback& on_epoch) {
  spec.validate();
  require(static_cast<std::size_t>(features.cols()) == spec.input_dim, ErrorKind::Shape,
          "features have " + std::to_string(features.cols()) + " columns, autoencoder expects " +
              std::to_string(spec.input_dim));
  require(model.encoder.input_dim() == spec.input_dim &&
              model.decoder.output_dim() == spec.input_dim,
          ErrorKind::Shape, "autoencoder does not match the feature dimension");
  require(features.rows() >= 1, ErrorKind::Data, "no training samples");

  const auto start = std::chrono::steady_clock::now();
  const auto n = static_cast<std::size_t>(features.rows());
  PretrainReport report;
  report.seed = rng.seed();

  nn::AdamState adam{spec.optimizer, {}, {}, 0};
  std::vector<std::size_t> order(n);
  Matrix batch;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    const Autoencoder last_good = model;
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += spec.batch_size) {
      const std::size_t rows = std::min(spec.batch_size, n - begin);
      batch.resize(static_cast<Eigen::Index>(rows), features.cols());
      for (std::size_t r = 0; r < rows; ++r)
        batch.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(order[begin + r]));

      const auto enc_trace = nn::forward(model.encoder, batch);
      const auto dec_trace = nn::forward(model.decoder, enc_trace.output());
      const double loss = nn::mse_loss(dec_trace.output(), batch);
      if (!std::isfinite(loss))
        throw PretrainAborted("reconstruction loss became non-finite in epoch " +
                                  std::to_string(epoch),
                              last_good, epoch);
      loss_sum += loss * static_cast<double>(rows);

      const auto dec_grads = nn::backward(model.decoder, dec_trace,
                                          nn::mse_loss_grad(dec_trace.output(), batch));
      const auto enc_grads = nn::backward(model.encoder, enc_trace, dec_grads.input, false);

      auto params = nn::parameter_blocks(model.encoder, "encoder.");
      auto dec_params = nn::parameter_blocks(model.decoder, "decoder.");
      params.insert(params.end(), dec_params.begin(), dec_params.end());
      auto grads = nn::gradient_blocks(enc_grads, "encoder.");
      auto dec_g = nn::gradient_blocks(dec_grads, "decoder.");
      grads.insert(grads.end(), dec_g.begin(), dec_g.end());
      try {
        nn::adam_step(params, grads, adam);
      } catch (const Error& e) {
        throw PretrainAborted(e.what(), last_good, epoch);
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    report.loss_curve.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  report.final_loss = report.loss_curve.back();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Matrix encode(const nn::Mlp& encoder, const Matrix& features) {
  require(!encoder.layers.empty(), ErrorKind::Config, "encoder has no layers");
  require(static_cast<std::size_t>(features.cols()) == encoder.input_dim(), ErrorKind::Shape,
          "features have " + std::to_string(features.cols()) + " columns, encoder expects " +
              std::to_string(encoder.input_dim()));
  constexpr Eigen::Index kChunk = 1024;
  Matrix z(features.rows(), static_cast<Eigen::Index>(encoder.output_dim()));
  for (Eigen::Index begin = 0; begin < features.rows(); begin += kChunk) {
    const Eigen::Index rows = std::min(kChunk, features.rows() - begin);
    z.middleRows(begin, rows) = nn::predict(encoder, features.middleRows(begin, rows));
  }
  return z;
}

Matrix reconstruct(const Autoencoder& model, const Matrix& features) {
  return nn::predict(model.decoder, encode(model.encoder, features));
}

}  // namespace delius::ae
