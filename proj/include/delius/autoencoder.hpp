// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "delius/error.hpp"
#include "delius/neural.hpp"

namespace delius::ae {

struct AutoencoderSpec {
  std::size_t input_dim = 1024;
  std::vector<std::size_t> encoder_dims{500, 500, 2000, 10};
  std::size_t batch_size = 256;
  std::size_t epochs = 200;
  nn::AdamConfig optimizer;
  double init_stddev = 0.01;

  std::size_t latent_dim() const { return encoder_dims.back(); }
  void validate() const;
};

/// Encoder phi and its mirrored decoder psi. Hidden layers use relu; the
/// latent layer and the reconstruction layer are linear.
struct Autoencoder {
  nn::Mlp encoder;
  nn::Mlp decoder;

  /// Full width chain, e.g. 1024-500-500-2000-10-2000-500-500-1024.
  std::vector<std::size_t> chain() const;
  std::size_t parameter_count() const {
    return encoder.parameter_count() + decoder.parameter_count();
  }
};

Autoencoder build(const AutoencoderSpec& spec, Rng& rng);

struct PretrainReport {
  std::vector<double> loss_curve;  // per-epoch mean of minibatch losses
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Raised when the reconstruction loss turns non-finite. Carries the
/// parameters as they were at the start of the failing epoch.
class PretrainAborted : public Error {
 public:
  PretrainAborted(const std::string& what, Autoencoder last_good, std::size_t epoch)
      : Error(ErrorKind::Numeric, what), last_good_(std::move(last_good)), epoch_(epoch) {}
  const Autoencoder& last_good() const { return last_good_; }
  std::size_t epoch() const { return epoch_; }

 private:
  Autoencoder last_good_;
  std::size_t epoch_;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Minimizes the mean squared reconstruction loss with Adam over
/// `spec.epochs` passes of reshuffled minibatches (last partial batch kept).
PretrainReport pretrain(Autoencoder& model, const Matrix& features, const AutoencoderSpec& spec,
                        Rng& rng, const EpochCallback& on_epoch = {});

/// Z = phi(X), evaluated in row chunks.
Matrix encode(const nn::Mlp& encoder, const Matrix& features);

Matrix reconstruct(const Autoencoder& model, const Matrix& features);

}  // namespace delius::ae
