// SPDX-License-Identifier: Apache-2.0
#include "delius/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "delius/error.hpp"

namespace delius::metrics {
namespace {

// Maps arbitrary non-negative labels onto 0..k-1 in ascending order.
std::vector<int> densify(std::span<const int> labels, std::size_t& k) {
  std::map<int, int> index;
  for (int l : labels) {
    require(l >= 0, ErrorKind::Data, "cluster labels must be non-negative");
    index.emplace(l, 0);
  }
  int next = 0;
  for (auto& [label, idx] : index) idx = next++;
  k = index.size();
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(index.at(l));
  return out;
}

void check_cluster_count(std::size_t k, std::size_t n) {
  require(k >= 2 && k + 1 <= n, ErrorKind::Config,
          "internal indices need 2 <= clusters <= n - 1 (clusters = " + std::to_string(k) +
              ", n = " + std::to_string(n) + ")");
}

}  // namespace

std::vector<double> silhouette_samples(const Matrix& points, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(points.rows());
  require(labels.size() == n, ErrorKind::Shape, "one label per point required");
  std::size_t k = 0;
  const auto dense = densify(labels, k);
  check_cluster_count(k, n);

  std::vector<std::size_t> sizes(k, 0);
  for (int l : dense) ++sizes[static_cast<std::size_t>(l)];

  std::vector<double> out(n, 0.0);
  std::vector<double> dist_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(dense[i]);
    if (sizes[own] == 1) continue;
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[static_cast<std::size_t>(dense[j])] +=
          (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
    }
    const double a = dist_sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own) b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    out[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return out;
}

double silhouette(const Matrix& points, std::span<const int> labels) {
  const auto values = silhouette_samples(points, labels);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

ChIndex calinski_harabasz(const Matrix& points, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(points.rows());
  require(labels.size() == n, ErrorKind::Shape, "one label per point required");
  std::size_t k = 0;
  const auto dense = densify(labels, k);
  check_cluster_count(k, n);

  Matrix centers = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    centers.row(dense[i]) += points.row(static_cast<Eigen::Index>(i));
    ++sizes[static_cast<std::size_t>(dense[i])];
  }
  for (std::size_t c = 0; c < k; ++c) centers.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);
  const RowVector mean = points.colwise().mean();

  double between = 0.0, within = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    between += static_cast<double>(sizes[c]) * (centers.row(static_cast<Eigen::Index>(c)) - mean).squaredNorm();
  for (std::size_t i = 0; i < n; ++i)
    within += (points.row(static_cast<Eigen::Index>(i)) - centers.row(dense[i])).squaredNorm();

  ChIndex out;
  if (within < 1e-300) {
    out.value = std::numeric_limits<double>::infinity();
    out.infinite = true;
    return out;
  }
  out.value = (between / within) * (static_cast<double>(n - k) / static_cast<double>(k - 1));
  return out;
}

std::vector<int> max_weight_matching(const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size();
  if (rows == 0) return {};
  const std::size_t cols = weights.front().size();
  for (const auto& r : weights) require(r.size() == cols, ErrorKind::Shape, "ragged weight matrix");
  const std::size_t size = std::max(rows, cols);

  // Square cost matrix (negated weights, zero padding); Kuhn-Munkres with
  // potentials, 1-based indexing as in the classic O(size^3) formulation.
  double max_w = 0.0;
  for (const auto& r : weights)
    for (double w : r) max_w = std::max(max_w, w);
  auto cost = [&](std::size_t i, std::size_t j) {
    if (i < rows && j < cols) return max_w - weights[i][j];
    return max_w;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(size + 1, 0.0), v(size + 1, 0.0);
  std::vector<std::size_t> match_col(size + 1, 0), way(size + 1, 0);
  for (std::size_t i = 1; i <= size; ++i) {
    match_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(size + 1, inf);
    std::vector<char> used(size + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= size; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= size; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(rows, -1);
  for (std::size_t j = 1; j <= size; ++j) {
    const std::size_t i = match_col[j];
    if (i >= 1 && i <= rows && j <= cols) row_to_col[i - 1] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

double clustering_accuracy(std::span<const int> truth, std::span<const int> clusters) {
  require(truth.size() == clusters.size(), ErrorKind::Shape,
          "truth and cluster label vectors differ in length");
  std::size_t labeled = 0;
  int max_class = -1, max_cluster = -1;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0) continue;
    require(clusters[i] >= 0, ErrorKind::Data, "cluster labels must be non-negative");
    ++labeled;
    max_class = std::max(max_class, truth[i]);
    max_cluster = std::max(max_cluster, clusters[i]);
  }
  require(labeled > 0, ErrorKind::Config, "accuracy needs at least one labeled sample");

  std::vector<std::vector<double>> confusion(static_cast<std::size_t>(max_cluster + 1),
                                             std::vector<double>(static_cast<std::size_t>(max_class + 1), 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] >= 0) confusion[static_cast<std::size_t>(clusters[i])][static_cast<std::size_t>(truth[i])] += 1.0;

  const auto match = max_weight_matching(confusion);
  double hits = 0.0;
  for (std::size_t c = 0; c < match.size(); ++c)
    if (match[c] >= 0) hits += confusion[c][static_cast<std::size_t>(match[c])];
  return hits / static_cast<double>(labeled);
}

EvalReport evaluate(const Matrix& points, std::span<const int> labels, const std::string& space_tag,
                    LabelSet truth) {
  EvalReport r;
  r.n = static_cast<std::size_t>(points.rows());
  r.space_tag = space_tag;
  r.space_dim = static_cast<std::size_t>(points.cols());
  r.k = std::set<int>(labels.begin(), labels.end()).size();
  r.sc = silhouette(points, labels);
  r.chi = calinski_harabasz(points, labels);
  if (!truth.style.empty()) r.acc_style = clustering_accuracy(truth.style, labels);
  if (!truth.genre.empty()) r.acc_genre = clustering_accuracy(truth.genre, labels);
  return r;
}

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["sc"] = r.sc;
  if (r.chi.infinite) j["chi"] = nullptr;
  else j["chi"] = r.chi.value;
  j["chi_infinite"] = r.chi.infinite;
  j["acc_style"] = r.acc_style ? nlohmann::ordered_json(*r.acc_style) : nlohmann::ordered_json(nullptr);
  j["acc_genre"] = r.acc_genre ? nlohmann::ordered_json(*r.acc_genre) : nlohmann::ordered_json(nullptr);
  j["k"] = r.k;
  j["n"] = r.n;
  j["space_tag"] = r.space_tag;
  j["space_dim"] = r.space_dim;
  if (r.strategy) j["strategy"] = *r.strategy;
  if (r.seed) j["seed"] = *r.seed;
  return j.dump(2) + "\n";
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << to_json(report);
  if (!out) fail(ErrorKind::Io, "write failure on " + path.string());
}

}  // namespace delius::metrics
