// SPDX-License-Identifier: Apache-2.0
#include "delius/dec.hpp"

#include <cmath>
#include <numeric>

#include "delius/autoencoder.hpp"
#include "delius/error.hpp"

namespace delius::dec {
namespace {

void check_centroids(const Matrix& centroids) {
  for (Eigen::Index a = 0; a < centroids.rows(); ++a)
    for (Eigen::Index b = a + 1; b < centroids.rows(); ++b)
      if ((centroids.row(a) - centroids.row(b)).norm() < 1e-12)
        fail(ErrorKind::Degenerate, "centroids " + std::to_string(a) + " and " +
                                        std::to_string(b) + " coincide");
}

// Kernel values w_ij = 1 / (1 + ||z_i - mu_j||^2).
Matrix kernel(const Matrix& z, const Matrix& centroids) {
  require(z.cols() == centroids.cols(), ErrorKind::Shape,
          "embedding and centroid dimensions differ");
  require(centroids.rows() >= 1, ErrorKind::Config, "no centroids");
  check_centroids(centroids);
  Matrix w(z.rows(), centroids.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < centroids.rows(); ++j)
      w(i, j) = 1.0 / (1.0 + (z.row(i) - centroids.row(j)).squaredNorm());
  return w;
}

Matrix normalize_rows(Matrix m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).sum();
  return m;
}

}  // namespace

Matrix soft_assign(const Matrix& z, const Matrix& centroids) {
  return normalize_rows(kernel(z, centroids));
}

Matrix target_distribution(const Matrix& q) {
  require(q.rows() >= 1 && q.cols() >= 1, ErrorKind::Shape, "empty soft assignment");
  const RowVector freq = q.colwise().sum();
  for (Eigen::Index j = 0; j < freq.size(); ++j)
    if (!(freq(j) >= 1e-300))
      fail(ErrorKind::Degenerate, "cluster " + std::to_string(j) + " has zero soft frequency");
  Matrix p = q.cwiseProduct(q);
  p.array().rowwise() /= freq.array();
  return normalize_rows(std::move(p));
}

double kl_loss(const Matrix& p, const Matrix& q) {
  require(p.rows() == q.rows() && p.cols() == q.cols(), ErrorKind::Shape,
          "P and Q shapes differ");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (pij == 0.0) continue;
      if (q(i, j) <= 0.0)
        fail(ErrorKind::Numeric, "q is zero where p is positive at (" + std::to_string(i) +
                                     ", " + std::to_string(j) + ")");
      total += pij * std::log(pij / q(i, j));
    }
  return total;
}

KlGradients kl_grads(const Matrix& z, const Matrix& centroids, const Matrix& p) {
  const Matrix w = kernel(z, centroids);
  require(p.rows() == z.rows() && p.cols() == centroids.rows(), ErrorKind::Shape,
          "target distribution shape does not match embeddings and centroids");
  const Matrix q = normalize_rows(w);
  // coeff_ij = w_ij (p_ij - q_ij); both gradients are weighted sums of
  // (z_i - mu_j) with these coefficients.
  const Matrix coeff = w.cwiseProduct(p - q);
  KlGradients g;
  g.z = 2.0 * (coeff.rowwise().sum().asDiagonal() * z - coeff * centroids);
  g.centroids = -2.0 * (coeff.transpose() * z - coeff.colwise().sum().transpose().asDiagonal() * centroids);
  return g;
}

Labels hard_labels(const Matrix& q) {
  Labels out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < q.cols(); ++j)
      if (q(i, j) > q(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

void DecConfig::validate() const {
  require(k >= 2, ErrorKind::Config, "k must be >= 2 for deep embedded clustering");
  require(update_interval >= 1, ErrorKind::Config, "update interval must be >= 1");
  require(delta > 0.0 && delta <= 1.0, ErrorKind::Config, "delta must lie in (0, 1]");
  require(batch_size >= 1, ErrorKind::Config, "batch size must be >= 1");
  require(init.restarts >= 1, ErrorKind::Config, "k-means restarts must be >= 1");
}

InitialClustering initial_clustering(const nn::Mlp& encoder, const Matrix& features,
                                     const kmeans::KmeansConfig& config, Rng& rng) {
  InitialClustering out;
  out.z = ae::encode(encoder, features);
  out.kmeans = kmeans::kmeans_fit(out.z, config, rng);
  return out;
}

DecResult dec_fit(const Matrix& features, nn::Mlp encoder, const DecConfig& config, Rng& rng,
                  const RefreshCallback& on_refresh) {
  config.validate();
  nn::validate(encoder);
  const auto n = static_cast<std::size_t>(features.rows());
  require(n >= config.k, ErrorKind::Config, "k exceeds the number of samples");

  kmeans::KmeansConfig km = config.init;
  km.k = config.k;
  auto init = initial_clustering(encoder, features, km, rng);

  DecResult result;
  result.initial_labels = init.kmeans.labels;
  Matrix centroids = init.kmeans.centroids;
  result.init = std::move(init.kmeans);

  nn::AdamState encoder_adam{config.optimizer, {}, {}, 0};
  nn::AdamState centroid_adam{config.optimizer, {}, {}, 0};

  AssignmentState& state = result.state;
  Matrix frozen_p;  // target used for the steps since the last refresh
  bool have_previous = false;

  std::vector<std::size_t> order(n);
  std::size_t cursor = n;  // forces a shuffle before the first batch
  Matrix batch_x, batch_p;

  std::size_t iter = 0;
  for (;;) {
    const bool at_cap = iter >= config.max_iterations;
    if (iter % config.update_interval == 0 || at_cap) {
      const Matrix z = iter == 0 ? std::move(init.z) : ae::encode(encoder, features);
      state.q = soft_assign(z, centroids);
      state.p = target_distribution(state.q);
      state.hard = hard_labels(state.q);
      state.iter = iter;

      RefreshRecord rec;
      rec.refresh_index = result.history.size();
      rec.iter = iter;
      rec.kl_refreshed = kl_loss(state.p, state.q);
      rec.kl_full = have_previous ? kl_loss(frozen_p, state.q) : rec.kl_refreshed;
      if (have_previous) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) changed += state.hard[i] != state.last_hard[i];
        rec.changed_fraction = static_cast<double>(changed) / static_cast<double>(n);
      }
      result.history.push_back(rec);
      if (on_refresh) on_refresh(rec);

      if (have_previous && rec.changed_fraction < config.delta) {
        result.converged = true;
        break;
      }
      if (at_cap) break;
      state.last_hard = state.hard;
      frozen_p = state.p;
      have_previous = true;
    }

    if (cursor >= n) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(order));
      cursor = 0;
    }
    const std::size_t rows = std::min(config.batch_size, n - cursor);
    batch_x.resize(static_cast<Eigen::Index>(rows), features.cols());
    batch_p.resize(static_cast<Eigen::Index>(rows), frozen_p.cols());
    for (std::size_t r = 0; r < rows; ++r) {
      const auto src = static_cast<Eigen::Index>(order[cursor + r]);
      batch_x.row(static_cast<Eigen::Index>(r)) = features.row(src);
      batch_p.row(static_cast<Eigen::Index>(r)) = frozen_p.row(src);
    }
    cursor += rows;

    const auto trace = nn::forward(encoder, batch_x);
    auto grads = kl_grads(trace.output(), centroids, batch_p);
    const double scale = 1.0 / static_cast<double>(rows);
    grads.z *= scale;
    grads.centroids *= scale;
    const auto enc_grads = nn::backward(encoder, trace, grads.z, false);
    nn::adam_step(encoder, enc_grads, encoder_adam);
    const nn::ParamBlock mu_block{"centroids", {centroids.data(), static_cast<std::size_t>(centroids.size())}};
    const nn::GradBlock mu_grad{"centroids", {grads.centroids.data(), static_cast<std::size_t>(grads.centroids.size())}};
    nn::adam_step(std::span(&mu_block, 1), std::span(&mu_grad, 1), centroid_adam);
    ++iter;
  }

  result.encoder = std::move(encoder);
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace delius::dec
