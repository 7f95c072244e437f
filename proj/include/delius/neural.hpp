// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "delius/rng.hpp"
#include "delius/types.hpp"

namespace delius::nn {

enum class Activation { Relu, Identity };

const char* to_string(Activation a) noexcept;
Activation activation_from_string(const std::string& name);

/// y = act(x W^T + b), one sample per row of x.
struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Identity;

  std::size_t in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Chain of dense layers; output width of layer i equals input width of i+1.
struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.front().in(); }
  std::size_t output_dim() const { return layers.back().out(); }
  std::vector<std::size_t> dims() const;
  std::size_t parameter_count() const;
};

void validate(const Mlp& mlp);

/// Weights ~ N(0, stddev^2) in layer order (row-major within a layer),
/// biases zero. `dims` has one more entry than `activations`.
Mlp init_params(std::span<const std::size_t> dims, std::span<const Activation> activations,
                Rng& rng, double stddev = 0.01);

struct ForwardTrace {
  // activations[0] is the input batch, activations[l + 1] the output of layer l.
  std::vector<Matrix> activations;
  const Matrix& output() const { return activations.back(); }
};

ForwardTrace forward(const Mlp& mlp, const Matrix& x);

/// Forward pass keeping only the final output.
Matrix predict(const Mlp& mlp, const Matrix& x);

/// (1/n) * sum_i ||recon_i - x_i||^2.
double mse_loss(const Matrix& recon, const Matrix& x);
/// d mse_loss / d recon.
Matrix mse_loss_grad(const Matrix& recon, const Matrix& x);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;  // d loss / d x
};

/// Reverse-mode pass for a scalar loss whose gradient w.r.t. the network
/// output is `output_grad`. `Gradients::input` is left empty when
/// `with_input_grad` is false (saves one product on the widest layer).
Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const Matrix& output_grad,
                   bool with_input_grad = true);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Named view of one contiguous parameter (or gradient) block.
template <typename T>
struct Block {
  std::string name;
  std::span<T> values;
};
using ParamBlock = Block<double>;
using GradBlock = Block<const double>;

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update. Moment buffers are sized on the first
/// call. Rejects non-finite gradients before touching any parameter.
void adam_step(std::span<const ParamBlock> params, std::span<const GradBlock> grads,
               AdamState& state);

std::vector<ParamBlock> parameter_blocks(Mlp& mlp, const std::string& prefix = "");
std::vector<GradBlock> gradient_blocks(const Gradients& g, const std::string& prefix = "");

void adam_step(Mlp& mlp, const Gradients& grads, AdamState& state);

}  // namespace delius::nn
