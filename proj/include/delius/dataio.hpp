// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delius/types.hpp"

namespace delius::dataio {

enum class FileFormat { Binary, Csv };
enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

/// n x d descriptors plus one opaque identifier per row.
struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> ids;

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(values.cols()); }
};

/// n x c x s tensor of per-channel spatial maps (c channels of s cells each).
struct FeatureMapBlock {
  std::size_t n = 0;
  std::size_t channels = 0;
  std::size_t cells = 0;
  std::vector<double> values;  // index ((i * channels) + j) * cells + cell
  std::vector<std::string> ids;
};

/// Optional categorical labels per sample. -1 marks "unlabeled".
struct LabelColumn {
  Labels labels;
  std::vector<std::string> class_names;  // class index -> original name
  std::size_t num_classes() const { return class_names.size(); }
};

struct LabelManifest {
  std::vector<std::string> ids;
  std::optional<LabelColumn> style;
  std::optional<LabelColumn> genre;
};

struct ClusterAssignments {
  std::vector<std::string> ids;
  Labels hard;
  std::optional<Matrix> q;  // n x k soft memberships
  std::size_t k = 0;
};

struct CsvOptions {
  bool header = false;  // skip one header row on read
};

// Validates the FeatureMatrix invariants (n, d >= 1, finite, unique ids).
void validate(const FeatureMatrix& m);

FeatureMatrix make_features(Matrix values, std::vector<std::string> ids = {});

FeatureMatrix read_features(const std::filesystem::path& path, FileFormat format,
                            CsvOptions csv = {});
void write_features(const FeatureMatrix& m, const std::filesystem::path& path,
                    FileFormat format, DType dtype = DType::F64);

/// Sidecar file holding one id per line next to a DELF/DELM file.
std::filesystem::path ids_sidecar(const std::filesystem::path& path);

FeatureMapBlock read_feature_maps(const std::filesystem::path& path);
void write_feature_maps(const FeatureMapBlock& block, const std::filesystem::path& path,
                        DType dtype = DType::F64);

FeatureMatrix global_average_pool(const FeatureMapBlock& block);

/// Reads `id,style,genre` (header row required, empty cell = unlabeled).
LabelManifest read_label_manifest(const std::filesystem::path& path);

/// Labels aligned to the rows of `m` for one manifest column ("style" or
/// "genre"). Rows absent from the manifest are -1.
LabelColumn align_labels(const LabelManifest& manifest, const FeatureMatrix& m,
                         const std::string& column);

void write_assignments(const ClusterAssignments& a, const std::filesystem::path& path);
ClusterAssignments read_assignments(const std::filesystem::path& path);

/// Writes `header` then one row per sample: id followed by the row values.
void write_table(const FeatureMatrix& m, std::span<const std::string> header,
                 const std::filesystem::path& path);

struct StratifiedSample {
  FeatureMatrix matrix;
  std::vector<std::size_t> rows;  // selected source rows, ascending
};

/// Per class, keeps max(1, round(fraction * count)) rows chosen uniformly at
/// random. Selected rows keep their original relative order.
StratifiedSample stratified_sample(const FeatureMatrix& m, std::span<const int> labels,
                                   double fraction, std::uint64_t seed);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace delius::dataio
