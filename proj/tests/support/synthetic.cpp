// SPDX-License-Identifier: Apache-2.0
#include "synthetic.hpp"

#include <cmath>
#include <numbers>

#include "delius/rng.hpp"

namespace delius::testing {

LabeledData make_blobs(std::size_t n, std::size_t d, std::size_t k, double separation,
                       double sigma, std::uint64_t seed) {
  Rng rng(seed);
  LabeledData out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const double offset = separation / std::numbers::sqrt2;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % k);
    out.labels.push_back(c);
    for (std::size_t j = 0; j < d; ++j) {
      double v = rng.normal(0.0, sigma);
      if (j == static_cast<std::size_t>(c) % d) v += offset;
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

LabeledData make_manifold_clusters(std::size_t n, std::size_t d, std::uint64_t seed) {
  constexpr int kClusters = 8;
  constexpr std::size_t kLatent = 3;
  constexpr std::size_t kHidden = 16;
  Rng rng(seed);

  // Cluster centers on a twisted ring; each cluster stretched along a random
  // direction (stddev 1.0) and thin elsewhere (stddev 0.3).
  Matrix centers(kClusters, kLatent);
  std::vector<Matrix> shapes;
  for (int c = 0; c < kClusters; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / kClusters;
    centers.row(c) << 3.0 * std::cos(angle), 3.0 * std::sin(angle), 1.0 * std::sin(2.0 * angle);
    Vector axis(kLatent);
    for (auto& a : axis) a = rng.normal();
    axis.normalize();
    Matrix shape = 0.3 * Matrix::Identity(kLatent, kLatent) + 0.7 * axis * axis.transpose();
    shapes.push_back(shape);
  }
  Matrix w1(kHidden, kLatent), w2(d, kHidden);
  for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = rng.normal(0.0, 0.5);
  for (Eigen::Index i = 0; i < w2.size(); ++i) w2.data()[i] = rng.normal(0.0, 1.0 / std::sqrt(double(kHidden)));
  Vector b1(kHidden);
  for (auto& b : b1) b = rng.normal(0.0, 0.3);

  LabeledData out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % kClusters);
    out.labels.push_back(c);
    Vector eps(kLatent);
    for (auto& e : eps) e = rng.normal();
    const Vector latent = centers.row(c).transpose() + shapes[static_cast<std::size_t>(c)] * eps;
    const Vector hidden = (w1 * latent + b1).array().tanh().matrix();
    Vector x = w2 * hidden;
    for (auto& v : x) v += rng.normal(0.0, 0.05);
    out.x.row(static_cast<Eigen::Index>(i)) = x.transpose();
  }
  return out;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

}  // namespace delius::testing
