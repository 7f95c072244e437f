// SPDX-License-Identifier: Apache-2.0
#include "delius/neural.hpp"

#include <cmath>

#include "delius/error.hpp"

namespace delius::nn {

const char* to_string(Activation a) noexcept {
  return a == Activation::Relu ? "relu" : "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  fail(ErrorKind::Format, "unknown activation '" + name + "'");
}

std::vector<std::size_t> Mlp::dims() const {
  std::vector<std::size_t> out;
  if (layers.empty()) return out;
  out.push_back(input_dim());
  for (const auto& l : layers) out.push_back(l.out());
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers) count += l.out() * l.in() + l.out();
  return count;
}

void validate(const Mlp& mlp) {
  require(!mlp.layers.empty(), ErrorKind::Config, "network has no layers");
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    const auto& l = mlp.layers[i];
    require(l.in() >= 1 && l.out() >= 1, ErrorKind::Config, "empty layer " + std::to_string(i));
    require(static_cast<std::size_t>(l.bias.size()) == l.out(), ErrorKind::Shape,
            "bias width mismatch in layer " + std::to_string(i));
    if (i > 0)
      require(mlp.layers[i - 1].out() == l.in(), ErrorKind::Config,
              "layer " + std::to_string(i) + " input does not chain with previous output");
  }
}

Mlp init_params(std::span<const std::size_t> dims, std::span<const Activation> activations,
                Rng& rng, double stddev) {
  require(dims.size() >= 2, ErrorKind::Config, "a network needs at least two layer widths");
  require(activations.size() + 1 == dims.size(), ErrorKind::Config,
          "expected one activation per layer");
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    require(dims[l] >= 1 && dims[l + 1] >= 1, ErrorKind::Config, "layer widths must be >= 1");
    DenseLayer layer;
    layer.weights.resize(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l]));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
      layer.weights.data()[i] = rng.normal(0.0, stddev);
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(dims[l + 1]));
    layer.activation = activations[l];
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

namespace {

void apply_layer(const DenseLayer& layer, const Matrix& in, Matrix& out) {
  out.noalias() = in * layer.weights.transpose();
  out.rowwise() += layer.bias.transpose();
  if (layer.activation == Activation::Relu) out = out.cwiseMax(0.0);
}

void check_input(const Mlp& mlp, const Matrix& x) {
  require(!mlp.layers.empty(), ErrorKind::Config, "network has no layers");
  require(static_cast<std::size_t>(x.cols()) == mlp.input_dim(), ErrorKind::Shape,
          "input has " + std::to_string(x.cols()) + " columns, network expects " +
              std::to_string(mlp.input_dim()));
}

}  // namespace

ForwardTrace forward(const Mlp& mlp, const Matrix& x) {
  check_input(mlp, x);
  ForwardTrace trace;
  trace.activations.reserve(mlp.layers.size() + 1);
  trace.activations.push_back(x);
  for (const auto& layer : mlp.layers) {
    Matrix out;
    apply_layer(layer, trace.activations.back(), out);
    trace.activations.push_back(std::move(out));
  }
  return trace;
}

Matrix predict(const Mlp& mlp, const Matrix& x) {
  check_input(mlp, x);
  Matrix cur = x, next;
  for (const auto& layer : mlp.layers) {
    apply_layer(layer, cur, next);
    std::swap(cur, next);
  }
  return cur;
}

double mse_loss(const Matrix& recon, const Matrix& x) {
  require(recon.rows() == x.rows() && recon.cols() == x.cols(), ErrorKind::Shape,
          "reconstruction and input shapes differ");
  require(x.rows() >= 1, ErrorKind::Shape, "empty batch");
  return (recon - x).squaredNorm() / static_cast<double>(x.rows());
}

Matrix mse_loss_grad(const Matrix& recon, const Matrix& x) {
  require(recon.rows() == x.rows() && recon.cols() == x.cols(), ErrorKind::Shape,
          "reconstruction and input shapes differ");
  return (2.0 / static_cast<double>(x.rows())) * (recon - x);
}

Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const Matrix& output_grad,
                   bool with_input_grad) {
  const std::size_t depth = mlp.layers.size();
  require(trace.activations.size() == depth + 1, ErrorKind::Shape,
          "forward trace does not match network depth");
  const Eigen::Index batch = trace.activations.front().rows();
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& a = trace.activations[l + 1];
    require(a.rows() == batch && static_cast<std::size_t>(a.cols()) == mlp.layers[l].out() &&
                static_cast<std::size_t>(trace.activations[l].cols()) == mlp.layers[l].in(),
            ErrorKind::Shape, "stale forward trace at layer " + std::to_string(l));
  }
  require(output_grad.rows() == batch && output_grad.cols() == trace.output().cols(),
          ErrorKind::Shape, "output gradient shape mismatch");

  Gradients g;
  g.weights.resize(depth);
  g.biases.resize(depth);
  Matrix delta = output_grad;
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = mlp.layers[l];
    if (layer.activation == Activation::Relu)
      delta = delta.cwiseProduct((trace.activations[l + 1].array() > 0.0).cast<double>().matrix());
    g.weights[l].noalias() = delta.transpose() * trace.activations[l];
    g.biases[l] = delta.colwise().sum().transpose();
    if (l == 0 && !with_input_grad) return g;
    Matrix upstream;
    upstream.noalias() = delta * layer.weights;
    delta = std::move(upstream);
  }
  g.input = std::move(delta);
  return g;
}

void adam_step(std::span<const ParamBlock> params, std::span<const GradBlock> grads,
               AdamState& state) {
  require(params.size() == grads.size(), ErrorKind::Shape,
          "parameter and gradient block counts differ");
  if (state.m.empty() && state.t == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.values.size(), 0.0);
      state.v.emplace_back(p.values.size(), 0.0);
    }
  }
  require(state.m.size() == params.size(), ErrorKind::Shape,
          "optimizer state does not match parameter blocks");
  for (std::size_t b = 0; b < params.size(); ++b) {
    require(params[b].values.size() == grads[b].values.size() &&
                state.m[b].size() == params[b].values.size(),
            ErrorKind::Shape, "shape mismatch in parameter block " + params[b].name);
    for (double g : grads[b].values)
      if (!std::isfinite(g))
        fail(ErrorKind::Numeric, "non-finite gradient in parameter block " + params[b].name);
  }

  const auto& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b].values;
    auto g = grads[b].values;
    auto& m = state.m[b];
    auto& v = state.v[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

std::vector<ParamBlock> parameter_blocks(Mlp& mlp, const std::string& prefix) {
  std::vector<ParamBlock> out;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    auto& layer = mlp.layers[l];
    out.push_back({prefix + "layer" + std::to_string(l) + ".weights",
                   {layer.weights.data(), static_cast<std::size_t>(layer.weights.size())}});
    out.push_back({prefix + "layer" + std::to_string(l) + ".bias",
                   {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())}});
  }
  return out;
}

std::vector<GradBlock> gradient_blocks(const Gradients& g, const std::string& prefix) {
  std::vector<GradBlock> out;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.push_back({prefix + "layer" + std::to_string(l) + ".weights",
                   {g.weights[l].data(), static_cast<std::size_t>(g.weights[l].size())}});
    out.push_back({prefix + "layer" + std::to_string(l) + ".bias",
                   {g.biases[l].data(), static_cast<std::size_t>(g.biases[l].size())}});
  }
  return out;
}

void adam_step(Mlp& mlp, const Gradients& grads, AdamState& state) {
  const auto params = parameter_blocks(mlp);
  const auto gs = gradient_blocks(grads);
  adam_step(params, gs, state);
}

}  // namespace delius::nn
