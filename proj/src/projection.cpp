// SPDX-License-Identifier: Apache-2.0
#include "delius/projection.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "delius/error.hpp"
#include "delius/rng.hpp"

namespace delius::projection {

PcaModel pca_fit(const Matrix& points, std::size_t r) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  require(n >= 2, ErrorKind::Config, "PCA needs at least two samples");
  require(r >= 1 && r <= std::min(n - 1, d), ErrorKind::Config,
          "PCA rank must satisfy 1 <= r <= min(n-1, d) = " + std::to_string(std::min(n - 1, d)));
  require(points.allFinite(), ErrorKind::Data, "PCA input contains non-finite values");

  PcaModel model;
  model.mean = points.colwise().mean();
  const Matrix centered = points.rowwise() - model.mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorKind::Numeric, "covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const auto dd = static_cast<Eigen::Index>(d);
  model.components.resize(static_cast<Eigen::Index>(r), dd);
  model.explained_variance.resize(static_cast<Eigen::Index>(r));
  for (std::size_t c = 0; c < r; ++c) {
    const Eigen::Index src = dd - 1 - static_cast<Eigen::Index>(c);
    Vector axis = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    model.components.row(static_cast<Eigen::Index>(c)) = axis.transpose();
    model.explained_variance(static_cast<Eigen::Index>(c)) = std::max(0.0, solver.eigenvalues()(src));
  }
  model.total_variance = cov.trace();
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& points) {
  require(points.cols() == model.mean.size(), ErrorKind::Shape,
          "points have " + std::to_string(points.cols()) + " columns, PCA expects " +
              std::to_string(model.mean.size()));
  return (points.rowwise() - model.mean) * model.components.transpose();
}

Matrix pca_inverse(const PcaModel& model, const Matrix& reduced) {
  require(reduced.cols() == model.components.rows(), ErrorKind::Shape,
          "reduced points do not match the PCA rank");
  Matrix out = reduced * model.components;
  out.rowwise() += model.mean;
  return out;
}

namespace {

Matrix squared_distances(const Matrix& x) {
  const Eigen::Index n = x.rows();
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

// Fills `row` with the conditional distribution p_{j|i} for precision beta
// and returns its entropy (natural log).
double conditional_row(const Matrix& dist, Eigen::Index i, double beta, RowVector& row) {
  const Eigen::Index n = dist.rows();
  // Shift by the smallest off-diagonal distance so exp() cannot underflow
  // to an all-zero row.
  double min_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != i) min_d = std::min(min_d, dist(i, j));
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    row(j) = j == i ? 0.0 : std::exp(-beta * (dist(i, j) - min_d));
    sum += row(j);
  }
  double weighted = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) weighted += row(j) * (dist(i, j) - min_d);
  row /= sum;
  return std::log(sum) + beta * weighted / sum;
}

}  // namespace

Matrix tsne_affinities(const Matrix& points, double perplexity) {
  const Eigen::Index n = points.rows();
  require(n >= 2, ErrorKind::Config, "t-SNE needs at least two points");
  require(perplexity > 1.0 && perplexity < static_cast<double>(n - 1) / 3.0, ErrorKind::Config,
          "perplexity must satisfy 1 < perplexity < (n-1)/3");
  const Matrix dist = squared_distances(points);
  const double target = std::log(perplexity);

  Matrix cond(n, n);
  RowVector row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double entropy = conditional_row(dist, i, beta, row);
    for (int step = 0; step < 50 && std::abs(entropy - target) > 1e-5; ++step) {
      if (entropy > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      entropy = conditional_row(dist, i, beta, row);
    }
    cond.row(i) = row;
  }
  Matrix p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  return p;
}

namespace {

// Student-t kernel numerators w_ij = 1 / (1 + ||y_i - y_j||^2), zero diagonal.
Matrix layout_kernel(const Matrix& y) {
  const Eigen::Index n = y.rows();
  Matrix w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

}  // namespace

double tsne_cost(const Matrix& p, const Matrix& y) {
  const Matrix w = layout_kernel(y);
  const double z = w.sum();
  double cost = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (i != j && p(i, j) > 0.0) cost += p(i, j) * std::log(p(i, j) / (w(i, j) / z));
  return cost;
}

Matrix tsne_gradient(const Matrix& p, const Matrix& y, double exaggeration) {
  require(p.rows() == y.rows() && p.cols() == y.rows(), ErrorKind::Shape,
          "affinity matrix does not match the layout");
  const Matrix w = layout_kernel(y);
  const double z = w.sum();
  // dC/dy_i = 4 sum_j (e p_ij - q_ij) w_ij (y_i - y_j)
  const Matrix coeff = (exaggeration * p - w / z).cwiseProduct(w);
  return 4.0 * (coeff.rowwise().sum().asDiagonal() * y - coeff * y);
}

Matrix tsne_embed(const Matrix& points, const TsneConfig& cfg) {
  require(points.rows() >= 5, ErrorKind::Config, "t-SNE needs at least 5 points");
  require(cfg.iterations >= 1, ErrorKind::Config, "t-SNE needs at least one iteration");
  require(cfg.learning_rate > 0.0, ErrorKind::Config, "t-SNE learning rate must be positive");
  require(points.allFinite(), ErrorKind::Data, "t-SNE input contains non-finite values");
  const Matrix p = tsne_affinities(points, cfg.perplexity);
  const Eigen::Index n = points.rows();

  Rng rng(cfg.seed);
  Matrix y(n, 2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal(0.0, 1e-4);
  Matrix velocity = Matrix::Zero(n, 2);
  Matrix gains = Matrix::Ones(n, 2);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = it < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch_iter ? cfg.initial_momentum : cfg.final_momentum;
    const Matrix grad = tsne_gradient(p, y, exaggeration);
    // Adaptive per-coordinate gains (delta-bar-delta).
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      double& g = gains.data()[i];
      g = (grad.data()[i] > 0.0) != (velocity.data()[i] > 0.0) ? g + 0.2 : g * 0.8;
      g = std::max(g, 0.01);
    }
    velocity = momentum * velocity - cfg.learning_rate * gains.cwiseProduct(grad);
    y += velocity;
    y.rowwise() -= y.colwise().mean();
  }
  if (!y.allFinite()) fail(ErrorKind::Numeric, "t-SNE layout diverged");
  return y;
}

}  // namespace delius::projection
