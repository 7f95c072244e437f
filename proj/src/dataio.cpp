// SPDX-License-Identifier: Apache-2.0
#include "delius/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "delius/error.hpp"
#include "delius/rng.hpp"

namespace delius::dataio {
namespace fs = std::filesystem;

namespace {

constexpr char kFeatureMagic[4] = {'D', 'E', 'L', 'F'};
constexpr char kMapMagic[4] = {'D', 'E', 'L', 'M'};
constexpr std::uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <typename T>
T byteswap_if_needed(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    v = byteswap_if_needed(v);
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_raw(const char* p, std::size_t len) { bytes_.insert(bytes_.end(), p, p + len); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<char>& bytes, const fs::path& path)
      : bytes_(bytes), path_(path) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  template <typename T>
  T get() {
    if (remaining() < sizeof(T))
      fail(ErrorKind::Format, path_.string() + ": truncated at byte offset " +
                                  std::to_string(pos_));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return byteswap_if_needed(v);
  }

  [[noreturn]] void error_at(std::size_t offset, const std::string& msg) const {
    fail(ErrorKind::Format,
         path_.string() + ": " + msg + " at byte offset " + std::to_string(offset));
  }

 private:
  const std::vector<char>& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 0;
};

std::vector<char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string() + " for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::Io, "read failure on " + path.string());
  return bytes;
}

void spit(const fs::path& path, const char* data, std::size_t len) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(data, static_cast<std::streamsize>(len));
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failure on " + path.string());
}

void spit(const fs::path& path, const std::string& text) { spit(path, text.data(), text.size()); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string() + " for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

double parse_double(const std::string& text, const fs::path& path, std::size_t line,
                    std::size_t column) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    fail(ErrorKind::Format, path.string() + ": line " + std::to_string(line) + " column " +
                                std::to_string(column) + ": not a number: '" + t + "'");
  return v;
}

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
  return ids;
}

std::vector<std::string> read_ids_or_default(const fs::path& path, std::size_t n) {
  const fs::path sidecar = ids_sidecar(path);
  if (!fs::exists(sidecar)) return default_ids(n);
  std::vector<std::string> ids = read_lines(sidecar);
  if (ids.size() != n)
    fail(ErrorKind::Format, sidecar.string() + ": expected " + std::to_string(n) +
                                " ids, found " + std::to_string(ids.size()));
  return ids;
}

void write_ids(const fs::path& path, const std::vector<std::string>& ids) {
  std::string text;
  for (const auto& id : ids) {
    text += id;
    text += '\n';
  }
  spit(ids_sidecar(path), text);
}

void check_finite(const Matrix& values, const std::string& where) {
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      if (!std::isfinite(values(i, j)))
        fail(ErrorKind::Data, where + ": non-finite value at row " + std::to_string(i) +
                                  ", column " + std::to_string(j));
}

struct BinaryHeader {
  DType dtype;
  std::vector<std::uint64_t> dims;
};

BinaryHeader read_header(ByteReader& r, const char (&magic)[4], std::size_t ndims,
                         const char* const* dim_names) {
  for (int i = 0; i < 4; ++i)
    if (r.get<char>() != magic[i]) r.error_at(0, "bad magic");
  const std::size_t version_at = r.offset();
  if (r.get<std::uint16_t>() != kVersion) r.error_at(version_at, "unsupported version");
  const std::size_t dtype_at = r.offset();
  const auto dtype = r.get<std::uint8_t>();
  if (dtype > 1) r.error_at(dtype_at, "unknown dtype " + std::to_string(dtype));
  const std::size_t reserved_at = r.offset();
  if (r.get<std::uint8_t>() != 0) r.error_at(reserved_at, "reserved byte must be 0");
  BinaryHeader h{static_cast<DType>(dtype), {}};
  for (std::size_t k = 0; k < ndims; ++k) {
    const std::size_t at = r.offset();
    const auto v = r.get<std::uint64_t>();
    if (v == 0) r.error_at(at, std::string(dim_names[k]) + " must be >= 1");
    h.dims.push_back(v);
  }
  return h;
}

std::vector<double> read_payload(ByteReader& r, DType dtype, std::uint64_t count) {
  const std::size_t width = dtype == DType::F32 ? 4 : 8;
  if (count > r.remaining() / width || r.remaining() != count * width)
    r.error_at(r.offset(), "payload size mismatch (expected " + std::to_string(count * width) +
                               " bytes, found " + std::to_string(r.remaining()) + ")");
  std::vector<double> out(count);
  if (dtype == DType::F32) {
    for (auto& v : out) v = static_cast<double>(r.get<float>());
  } else {
    for (auto& v : out) v = r.get<double>();
  }
  return out;
}

void write_header(ByteWriter& w, const char (&magic)[4], DType dtype,
                  std::initializer_list<std::uint64_t> dims) {
  w.put_raw(magic, 4);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(dtype));
  w.put<std::uint8_t>(0);
  for (auto d : dims) w.put<std::uint64_t>(d);
}

void write_payload(ByteWriter& w, DType dtype, const double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    if (dtype == DType::F32)
      w.put<float>(static_cast<float>(data[i]));
    else
      w.put<double>(data[i]);
  }
}

FeatureMatrix read_binary(const fs::path& path) {
  const auto bytes = slurp(path);
  ByteReader r(bytes, path);
  static const char* const names[] = {"n", "d"};
  const auto h = read_header(r, kFeatureMagic, 2, names);
  const auto n = h.dims[0];
  const auto d = h.dims[1];
  if (n > (std::uint64_t{1} << 40) / d) r.error_at(8, "n*d too large");
  auto payload = read_payload(r, h.dtype, n * d);
  FeatureMatrix m;
  m.values = Eigen::Map<Matrix>(payload.data(), static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(d));
  check_finite(m.values, path.string());
  m.ids = read_ids_or_default(path, n);
  return m;
}

FeatureMatrix read_csv(const fs::path& path, CsvOptions opts) {
  auto lines = read_lines(path);
  std::size_t first = opts.header ? 1 : 0;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> ids;
  std::size_t width = 0;
  for (std::size_t li = first; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cells = split(lines[li], ',');
    if (cells.size() < 2)
      fail(ErrorKind::Format, path.string() + ": line " + std::to_string(li + 1) +
                                  ": expected id followed by at least one value");
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      fail(ErrorKind::Format, path.string() + ": line " + std::to_string(li + 1) + ": expected " +
                                  std::to_string(width) + " columns, found " +
                                  std::to_string(cells.size()));
    ids.push_back(trim(cells[0]));
    std::vector<double> row(width - 1);
    for (std::size_t c = 1; c < width; ++c) row[c - 1] = parse_double(cells[c], path, li + 1, c);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::Format, path.string() + ": no data rows");
  FeatureMatrix m;
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j + 1 < width; ++j)
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  check_finite(m.values, path.string());
  m.ids = std::move(ids);
  return m;
}

// Class names sort numerically when every name is a non-negative integer,
// lexicographically otherwise, so indices do not depend on file order.
std::vector<std::string> sorted_class_names(const std::set<std::string>& names) {
  std::vector<std::string> out(names.begin(), names.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) {
    return !s.empty() && s.size() < 18 && std::all_of(s.begin(), s.end(), ::isdigit);
  });
  if (numeric)
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return std::stoull(a) < std::stoull(b);
    });
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

fs::path ids_sidecar(const fs::path& path) {
  fs::path p = path;
  p += ".ids";
  return p;
}

void validate(const FeatureMatrix& m) {
  require(m.values.rows() >= 1, ErrorKind::Data, "feature matrix needs at least one row");
  require(m.values.cols() >= 1, ErrorKind::Data, "feature matrix needs at least one column");
  require(m.ids.size() == m.n(), ErrorKind::Data,
          "expected " + std::to_string(m.n()) + " ids, found " + std::to_string(m.ids.size()));
  check_finite(m.values, "feature matrix");
  std::unordered_set<std::string> seen;
  for (const auto& id : m.ids)
    if (!seen.insert(id).second) fail(ErrorKind::Data, "duplicate sample id '" + id + "'");
}

FeatureMatrix make_features(Matrix values, std::vector<std::string> ids) {
  FeatureMatrix m{std::move(values), std::move(ids)};
  if (m.ids.empty()) m.ids = default_ids(m.n());
  validate(m);
  return m;
}

FeatureMatrix read_features(const fs::path& path, FileFormat format, CsvOptions csv) {
  FeatureMatrix m = format == FileFormat::Binary ? read_binary(path) : read_csv(path, csv);
  validate(m);
  return m;
}

void write_features(const FeatureMatrix& m, const fs::path& path, FileFormat format,
                    DType dtype) {
  validate(m);
  if (format == FileFormat::Binary) {
    ByteWriter w;
    write_header(w, kFeatureMagic, dtype, {m.n(), m.d()});
    write_payload(w, dtype, m.values.data(), m.n() * m.d());
    spit(path, w.bytes().data(), w.bytes().size());
    write_ids(path, m.ids);
    return;
  }
  std::string text;
  for (std::size_t i = 0; i < m.n(); ++i) {
    text += m.ids[i];
    for (std::size_t j = 0; j < m.d(); ++j) {
      text += ',';
      double v = m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (dtype == DType::F32) v = static_cast<float>(v);
      text += format_double(v);
    }
    text += '\n';
  }
  spit(path, text);
}

FeatureMapBlock read_feature_maps(const fs::path& path) {
  const auto bytes = slurp(path);
  ByteReader r(bytes, path);
  static const char* const names[] = {"n", "channels", "cells"};
  const auto h = read_header(r, kMapMagic, 3, names);
  FeatureMapBlock b;
  b.n = h.dims[0];
  b.channels = h.dims[1];
  b.cells = h.dims[2];
  if (b.n > (std::uint64_t{1} << 40) / b.channels / b.cells) r.error_at(8, "n*c*s too large");
  b.values = read_payload(r, h.dtype, b.n * b.channels * b.cells);
  for (std::size_t idx = 0; idx < b.values.size(); ++idx)
    if (!std::isfinite(b.values[idx]))
      fail(ErrorKind::Data, path.string() + ": non-finite value in sample " +
                                std::to_string(idx / (b.channels * b.cells)) + ", channel " +
                                std::to_string((idx / b.cells) % b.channels));
  b.ids = read_ids_or_default(path, b.n);
  return b;
}

void write_feature_maps(const FeatureMapBlock& b, const fs::path& path, DType dtype) {
  require(b.values.size() == b.n * b.channels * b.cells, ErrorKind::Shape,
          "feature map payload does not match n*c*s");
  ByteWriter w;
  write_header(w, kMapMagic, dtype, {b.n, b.channels, b.cells});
  write_payload(w, dtype, b.values.data(), b.values.size());
  spit(path, w.bytes().data(), w.bytes().size());
  write_ids(path, b.ids.empty() ? default_ids(b.n) : b.ids);
}

FeatureMatrix global_average_pool(const FeatureMapBlock& b) {
  require(b.cells > 0, ErrorKind::Data, "feature maps have zero spatial cells");
  require(b.n > 0 && b.channels > 0, ErrorKind::Data, "empty feature map block");
  require(b.values.size() == b.n * b.channels * b.cells, ErrorKind::Shape,
          "feature map payload does not match n*c*s");
  Matrix out(static_cast<Eigen::Index>(b.n), static_cast<Eigen::Index>(b.channels));
  const double inv = 1.0 / static_cast<double>(b.cells);
  for (std::size_t i = 0; i < b.n; ++i) {
    for (std::size_t j = 0; j < b.channels; ++j) {
      const double* cell = b.values.data() + (i * b.channels + j) * b.cells;
      double sum = 0.0;
      for (std::size_t s = 0; s < b.cells; ++s) sum += cell[s];
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sum * inv;
    }
  }
  return make_features(std::move(out), b.ids.empty() ? default_ids(b.n) : b.ids);
}

LabelManifest read_label_manifest(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) fail(ErrorKind::Format, path.string() + ": empty label manifest");
  const auto header = split(lines[0], ',');
  int id_col = -1, style_col = -1, genre_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == "id") id_col = static_cast<int>(c);
    if (name == "style") style_col = static_cast<int>(c);
    if (name == "genre") genre_col = static_cast<int>(c);
  }
  if (id_col < 0) fail(ErrorKind::Format, path.string() + ": header lacks an 'id' column");

  LabelManifest out;
  std::vector<std::string> style_raw, genre_raw;
  std::unordered_set<std::string> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cells = split(lines[li], ',');
    if (cells.size() != header.size())
      fail(ErrorKind::Format, path.string() + ": line " + std::to_string(li + 1) + ": expected " +
                                  std::to_string(header.size()) + " columns");
    const auto id = trim(cells[static_cast<std::size_t>(id_col)]);
    if (!seen.insert(id).second)
      fail(ErrorKind::Data, path.string() + ": duplicate id '" + id + "'");
    out.ids.push_back(id);
    style_raw.push_back(style_col >= 0 ? trim(cells[static_cast<std::size_t>(style_col)]) : "");
    genre_raw.push_back(genre_col >= 0 ? trim(cells[static_cast<std::size_t>(genre_col)]) : "");
  }

  auto encode = [](const std::vector<std::string>& raw) {
    std::set<std::string> names;
    for (const auto& s : raw)
      if (!s.empty()) names.insert(s);
    LabelColumn col;
    col.class_names = sorted_class_names(names);
    std::unordered_map<std::string, int> index;
    for (std::size_t c = 0; c < col.class_names.size(); ++c)
      index[col.class_names[c]] = static_cast<int>(c);
    for (const auto& s : raw) col.labels.push_back(s.empty() ? -1 : index.at(s));
    return col;
  };
  if (style_col >= 0) out.style = encode(style_raw);
  if (genre_col >= 0) out.genre = encode(genre_raw);
  return out;
}

LabelColumn align_labels(const LabelManifest& manifest, const FeatureMatrix& m,
                         const std::string& column) {
  const std::optional<LabelColumn>* src = nullptr;
  if (column == "style") src = &manifest.style;
  else if (column == "genre") src = &manifest.genre;
  else fail(ErrorKind::Config, "unknown label column '" + column + "' (expected style|genre)");
  if (!src->has_value()) fail(ErrorKind::Data, "label manifest has no '" + column + "' column");

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < m.ids.size(); ++i) row_of[m.ids[i]] = i;

  LabelColumn out;
  out.class_names = (*src)->class_names;
  out.labels.assign(m.n(), -1);
  for (std::size_t r = 0; r < manifest.ids.size(); ++r) {
    const int label = (*src)->labels[r];
    if (label < 0) continue;
    const auto it = row_of.find(manifest.ids[r]);
    if (it == row_of.end())
      fail(ErrorKind::Data, "labeled id '" + manifest.ids[r] + "' is not in the feature matrix");
    out.labels[it->second] = label;
  }
  return out;
}

void write_assignments(const ClusterAssignments& a, const fs::path& path) {
  require(a.ids.size() == a.hard.size(), ErrorKind::Shape, "ids and labels differ in length");
  if (a.q) require(static_cast<std::size_t>(a.q->rows()) == a.hard.size(), ErrorKind::Shape,
                   "soft assignment rows differ from label count");
  const std::size_t k = a.q ? static_cast<std::size_t>(a.q->cols()) : a.k;
  std::string text = "id,cluster";
  if (a.q)
    for (std::size_t j = 0; j < k; ++j) text += ",q_" + std::to_string(j);
  text += '\n';
  for (std::size_t i = 0; i < a.hard.size(); ++i) {
    if (a.hard[i] < 0 || static_cast<std::size_t>(a.hard[i]) >= k)
      fail(ErrorKind::Data, "cluster label out of range at row " + std::to_string(i));
    text += a.ids[i] + ',' + std::to_string(a.hard[i]);
    if (a.q)
      for (std::size_t j = 0; j < k; ++j)
        text += ',' + format_double((*a.q)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    text += '\n';
  }
  spit(path, text);
}

ClusterAssignments read_assignments(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) fail(ErrorKind::Format, path.string() + ": empty assignment file");
  const auto header = split(lines[0], ',');
  if (header.size() < 2 || trim(header[0]) != "id" || trim(header[1]) != "cluster")
    fail(ErrorKind::Format, path.string() + ": header must start with id,cluster");
  const std::size_t kq = header.size() - 2;
  ClusterAssignments a;
  std::vector<double> qvals;
  int max_label = -1;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cells = split(lines[li], ',');
    if (cells.size() != header.size())
      fail(ErrorKind::Format, path.string() + ": line " + std::to_string(li + 1) +
                                  ": column count differs from header");
    a.ids.push_back(trim(cells[0]));
    const double label = parse_double(cells[1], path, li + 1, 1);
    if (label < 0 || label != std::floor(label) || label > 1e9)
      fail(ErrorKind::Data, path.string() + ": line " + std::to_string(li + 1) +
                                ": cluster must be a non-negative integer");
    a.hard.push_back(static_cast<int>(label));
    max_label = std::max(max_label, a.hard.back());
    double sum = 0.0;
    for (std::size_t j = 0; j < kq; ++j) {
      const double q = parse_double(cells[2 + j], path, li + 1, 2 + j);
      if (!std::isfinite(q) || q < 0.0)
        fail(ErrorKind::Data, path.string() + ": line " + std::to_string(li + 1) +
                                  ": invalid soft membership");
      sum += q;
      qvals.push_back(q);
    }
    if (kq > 0 && std::abs(sum - 1.0) > 1e-9)
      fail(ErrorKind::Data, path.string() + ": line " + std::to_string(li + 1) +
                                ": soft memberships sum to " + format_double(sum));
  }
  if (a.hard.empty()) fail(ErrorKind::Format, path.string() + ": no assignment rows");
  if (kq > 0) {
    if (static_cast<std::size_t>(max_label) >= kq)
      fail(ErrorKind::Data, path.string() + ": cluster label exceeds soft-membership width");
    a.q = Eigen::Map<Matrix>(qvals.data(), static_cast<Eigen::Index>(a.hard.size()),
                             static_cast<Eigen::Index>(kq));
    a.k = kq;
  } else {
    a.k = static_cast<std::size_t>(max_label + 1);
  }
  return a;
}

void write_table(const FeatureMatrix& m, std::span<const std::string> header, const fs::path& path) {
  require(header.size() == m.d() + 1, ErrorKind::Shape, "table header width mismatch");
  std::string text;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) text += ',';
    text += header[c];
  }
  text += '\n';
  for (std::size_t i = 0; i < m.n(); ++i) {
    text += m.ids[i];
    for (std::size_t j = 0; j < m.d(); ++j)
      text += ',' + format_double(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    text += '\n';
  }
  spit(path, text);
}

StratifiedSample stratified_sample(const FeatureMatrix& m, std::span<const int> labels,
                                   double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::Config,
          "sample fraction must lie in (0, 1]");
  require(labels.size() == m.n(), ErrorKind::Data,
          "labels cover " + std::to_string(labels.size()) + " of " + std::to_string(m.n()) + " rows");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) fail(ErrorKind::Data, "row " + std::to_string(i) + " has no label");
    by_class[labels[i]].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& [cls, rows] : by_class) {
    const auto want = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size()))));
    rng.shuffle(std::span<std::size_t>(rows));
    chosen.insert(chosen.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(std::min(want, rows.size())));
  }
  std::sort(chosen.begin(), chosen.end());

  StratifiedSample out;
  out.rows = chosen;
  out.matrix.values.resize(static_cast<Eigen::Index>(chosen.size()), m.values.cols());
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    out.matrix.values.row(static_cast<Eigen::Index>(r)) = m.values.row(static_cast<Eigen::Index>(chosen[r]));
    out.matrix.ids.push_back(m.ids[chosen[r]]);
  }
  return out;
}

}  // namespace delius::dataio
