// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delius/types.hpp"

namespace delius::metrics {

/// Mean silhouette over all samples with Euclidean distances. Samples in
/// singleton clusters contribute 0. Needs 2 <= #clusters <= n - 1.
double silhouette(const Matrix& points, std::span<const int> labels);

/// Per-sample silhouette values.
std::vector<double> silhouette_samples(const Matrix& points, std::span<const int> labels);

struct ChIndex {
  double value = 0.0;     // +inf when every cluster collapses to a point
  bool infinite = false;
};

ChIndex calinski_harabasz(const Matrix& points, std::span<const int> labels);

/// Maximum-weight one-to-one assignment on a rectangular weight matrix.
/// Returns, for each row, the matched column or -1 when rows > cols.
std::vector<int> max_weight_matching(const std::vector<std::vector<double>>& weights);

/// Best accuracy over one-to-one mappings between cluster ids and classes.
/// Entries with truth < 0 (unlabeled) are skipped.
double clustering_accuracy(std::span<const int> truth, std::span<const int> clusters);

struct EvalReport {
  double sc = 0.0;
  ChIndex chi;
  std::optional<double> acc_style;
  std::optional<double> acc_genre;
  std::size_t k = 0;
  std::size_t n = 0;
  std::string space_tag;
  std::size_t space_dim = 0;
  // Set by the baseline runner.
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> seed;
};

struct LabelSet {
  std::span<const int> style;
  std::span<const int> genre;
};

/// SC and CHI of `labels` in `points`, plus ACC for each provided truth column.
EvalReport evaluate(const Matrix& points, std::span<const int> labels, const std::string& space_tag,
                    LabelSet truth = {});

std::string to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace delius::metrics
