// SPDX-License-Identifier: Apache-2.0
#include "delius/kmeans.hpp"

#include <limits>

#include "delius/error.hpp"

namespace delius::kmeans {
namespace {

double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

Matrix plus_plus_init(const Matrix& points, std::size_t k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(static_cast<Eigen::Index>(k), points.cols());
  const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  std::vector<double> nearest(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) nearest[static_cast<std::size_t>(i)] = sq_dist(points, i, centroids, 0);

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : nearest) total += d;
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest[static_cast<std::size_t>(i)];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      // Every point already coincides with a centroid.
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = nearest[static_cast<std::size_t>(i)];
      d = std::min(d, sq_dist(points, i, centroids, static_cast<Eigen::Index>(c)));
    }
  }
  return centroids;
}

// Means of the assigned points. An empty cluster takes the point currently
// farthest from its own centroid; that point is then excluded for further
// empty clusters in the same step.
Matrix update_centroids(const Matrix& points, const Matrix& old, const Labels& labels) {
  const Eigen::Index k = old.rows();
  Matrix sums = Matrix::Zero(k, points.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    sums.row(l) += points.row(i);
    ++counts[static_cast<std::size_t>(l)];
  }
  Matrix next = old;
  std::vector<double> cost;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) {
      next.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      continue;
    }
    if (cost.empty()) {
      cost.resize(static_cast<std::size_t>(points.rows()));
      for (Eigen::Index i = 0; i < points.rows(); ++i)
        cost[static_cast<std::size_t>(i)] = sq_dist(points, i, old, labels[static_cast<std::size_t>(i)]);
    }
    std::size_t far = 0;
    for (std::size_t i = 1; i < cost.size(); ++i)
      if (cost[i] > cost[far]) far = i;
    next.row(j) = points.row(static_cast<Eigen::Index>(far));
    cost[far] = -1.0;
  }
  return next;
}

struct RestartOutcome {
  Matrix centroids;
  Labels labels;
  double inertia;
  std::size_t iterations;
  std::vector<double> history;
};

RestartOutcome lloyd(const Matrix& points, const KmeansConfig& cfg, Rng& rng) {
  RestartOutcome out;
  out.centroids = plus_plus_init(points, cfg.k, rng);
  out.labels = assign(points, out.centroids);
  out.history.push_back(inertia(points, out.centroids, out.labels));
  out.iterations = 0;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    Matrix next = update_centroids(points, out.centroids, out.labels);
    const double shift = (next - out.centroids).rowwise().norm().maxCoeff();
    out.centroids = std::move(next);
    Labels relabeled = assign(points, out.centroids);
    const bool changed = relabeled != out.labels;
    out.labels = std::move(relabeled);
    out.history.push_back(inertia(points, out.centroids, out.labels));
    out.iterations = it + 1;
    if (!changed || shift < cfg.tol) break;
  }
  out.inertia = out.history.back();
  return out;
}

}  // namespace

Labels assign(const Matrix& points, const Matrix& centroids) {
  require(points.cols() == centroids.cols(), ErrorKind::Shape,
          "points and centroids differ in dimension");
  require(centroids.rows() >= 1, ErrorKind::Config, "no centroids");
  Labels labels(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = sq_dist(points, i, centroids, j);
      if (d < best) {
        best = d;
        best_j = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = best_j;
  }
  return labels;
}

double inertia(const Matrix& points, const Matrix& centroids, const Labels& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += sq_dist(points, i, centroids, labels[static_cast<std::size_t>(i)]);
  return total;
}

KmeansResult kmeans_fit(const Matrix& points, const KmeansConfig& config, Rng& rng) {
  require(config.k >= 1, ErrorKind::Config, "k must be >= 1");
  require(config.restarts >= 1, ErrorKind::Config, "restarts must be >= 1");
  require(points.rows() >= 1 && points.cols() >= 1, ErrorKind::Data, "no points to cluster");
  require(static_cast<std::size_t>(points.rows()) >= config.k, ErrorKind::Config,
          "k = " + std::to_string(config.k) + " exceeds the number of points (" +
              std::to_string(points.rows()) + ")");
  require(points.allFinite(), ErrorKind::Data, "points contain non-finite values");

  std::vector<std::uint64_t> seeds(config.restarts);
  for (auto& s : seeds) s = rng.derive_seed();

  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < config.restarts; ++r) {
    Rng restart_rng(seeds[r]);
    auto outcome = lloyd(points, config, restart_rng);
    if (outcome.inertia < best.inertia) {
      best.centroids = std::move(outcome.centroids);
      best.labels = std::move(outcome.labels);
      best.inertia = outcome.inertia;
      best.best_restart_index = r;
      best.iterations = outcome.iterations;
      best.inertia_history = std::move(outcome.history);
    }
  }
  best.restarts_run = config.restarts;
  best.config = config;
  return best;
}

}  // namespace delius::kmeans
