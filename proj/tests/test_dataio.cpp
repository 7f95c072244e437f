// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <map>

#include "delius/dataio.hpp"
#include "delius/error.hpp"
#include "delius/rng.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace delius;
using namespace delius::dataio;
using delius::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::Config;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("csv with ids parses into a 2x3 matrix") {
  TempDir dir;
  write_text(dir / "f.csv", "a,1,2,3\nb,4,5,6\n");
  const auto m = read_features(dir / "f.csv", FileFormat::Csv);
  REQUIRE(m.n() == 2);
  REQUIRE(m.d() == 3);
  CHECK(m.ids == std::vector<std::string>{"a", "b"});
  CHECK(m.values(1, 2) == 6.0);
}

TEST_CASE("csv header flag skips one row") {
  TempDir dir;
  write_text(dir / "f.csv", "id,x,y\na,1,2\n");
  const auto m = read_features(dir / "f.csv", FileFormat::Csv, {.header = true});
  CHECK(m.n() == 1);
  CHECK(kind_of([&] { read_features(dir / "f.csv", FileFormat::Csv); }) == ErrorKind::Format);
}

TEST_CASE("csv rejects NaN with row and column") {
  TempDir dir;
  write_text(dir / "f.csv", "a,1,2\nb,nan,3\n");
  try {
    read_features(dir / "f.csv", FileFormat::Csv);
    FAIL("expected data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("row 1, column 0") != std::string::npos);
  }
}

TEST_CASE("binary DELF file with known payload") {
  TempDir dir;
  std::string bytes = "DELF";
  const std::uint16_t version = 1;
  bytes.append(reinterpret_cast<const char*>(&version), 2);
  bytes.push_back(1);  // f64
  bytes.push_back(0);
  const std::uint64_t n = 1, d = 4;
  bytes.append(reinterpret_cast<const char*>(&n), 8);
  bytes.append(reinterpret_cast<const char*>(&d), 8);
  for (double v : {1.0, 2.0, 3.0, 4.0}) bytes.append(reinterpret_cast<const char*>(&v), 8);
  write_text(dir / "x.delf", bytes);

  const auto m = read_features(dir / "x.delf", FileFormat::Binary);
  CHECK(m.n() == 1);
  CHECK(m.d() == 4);
  CHECK(m.values(0, 3) == 4.0);
  CHECK(m.ids == std::vector<std::string>{"0"});

  write_features(m, dir / "y.delf", FileFormat::Binary);
  CHECK(read_bytes(dir / "y.delf") == bytes);
}

TEST_CASE("binary header errors report a byte offset") {
  TempDir dir;
  write_features(make_features(Matrix::Ones(2, 3)), dir / "ok.delf", FileFormat::Binary);
  std::string bytes = read_bytes(dir / "ok.delf");

  SUBCASE("d = 0") {
    std::memset(bytes.data() + 16, 0, 8);
    write_text(dir / "bad.delf", bytes);
    try {
      read_features(dir / "bad.delf", FileFormat::Binary);
      FAIL("expected format error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Format);
      CHECK(std::string(e.what()).find("byte offset 16") != std::string::npos);
    }
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    write_text(dir / "bad.delf", bytes);
    CHECK(kind_of([&] { read_features(dir / "bad.delf", FileFormat::Binary); }) == ErrorKind::Format);
  }
  SUBCASE("truncated payload") {
    bytes.resize(bytes.size() - 1);
    write_text(dir / "bad.delf", bytes);
    CHECK(kind_of([&] { read_features(dir / "bad.delf", FileFormat::Binary); }) == ErrorKind::Format);
  }
  SUBCASE("non-finite payload") {
    const double inf = std::numeric_limits<double>::infinity();
    std::memcpy(bytes.data() + 24 + 8 * 4, &inf, 8);
    write_text(dir / "bad.delf", bytes);
    try {
      read_features(dir / "bad.delf", FileFormat::Binary);
      FAIL("expected data error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.what()).find("row 1, column 1") != std::string::npos);
    }
  }
}

TEST_CASE("binary roundtrip is bit-exact for f64 and f32 payloads") {
  TempDir dir;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix v = delius::testing::random_matrix(10, 8, seed, 1e3);
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("s" + std::to_string(9 - i));
    const auto m = make_features(v, ids);
    write_features(m, dir / "a.delf", FileFormat::Binary, DType::F64);
    const auto back = read_features(dir / "a.delf", FileFormat::Binary);
    CHECK(bit_equal(back.values, m.values));
    CHECK(back.ids == ids);

    Matrix narrowed = v.cast<float>().cast<double>();
    const auto m32 = make_features(narrowed, ids);
    write_features(m32, dir / "b.delf", FileFormat::Binary, DType::F32);
    CHECK(bit_equal(read_features(dir / "b.delf", FileFormat::Binary).values, narrowed));
  }
}

TEST_CASE("csv roundtrip preserves values exactly") {
  TempDir dir;
  const auto m = make_features(delius::testing::random_matrix(6, 5, 9));
  write_features(m, dir / "m.csv", FileFormat::Csv);
  const auto back = read_features(dir / "m.csv", FileFormat::Csv);
  CHECK(bit_equal(back.values, m.values));
  CHECK(back.ids == m.ids);
}

TEST_CASE("writing to an unwritable path is an I/O error naming the path") {
  const auto m = make_features(Matrix::Ones(1, 1));
  try {
    write_features(m, "/nonexistent-dir/x.delf", FileFormat::Binary);
    FAIL("expected I/O error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
    CHECK(std::string(e.what()).find("/nonexistent-dir/x.delf") != std::string::npos);
  }
}

TEST_CASE("feature matrix invariants") {
  CHECK(kind_of([] { make_features(Matrix::Ones(2, 2), {"a", "a"}); }) == ErrorKind::Data);
  CHECK(kind_of([] { make_features(Matrix(0, 3)); }) == ErrorKind::Data);
}

TEST_CASE("global average pooling") {
  SUBCASE("constant maps pool to the constant") {
    FeatureMapBlock b{2, 3, 49, std::vector<double>(2 * 3 * 49, 1.0), {}};
    const auto m = global_average_pool(b);
    CHECK(m.values.isApprox(Matrix::Ones(2, 3)));
  }
  SUBCASE("single hot cell gives value / s") {
    const double v = 2.5;
    FeatureMapBlock b{1, 1, 49, std::vector<double>(49, 0.0), {"x"}};
    b.values.back() = 49.0 * v;
    CHECK(global_average_pool(b).values(0, 0) == doctest::Approx(v).epsilon(1e-15));
  }
  SUBCASE("random block matches per-channel summation") {
    Rng rng(5);
    FeatureMapBlock b{2, 3, 4, {}, {}};
    for (int i = 0; i < 24; ++i) b.values.push_back(rng.normal());
    const auto m = global_average_pool(b);
    for (int i = 0; i < 2; ++i)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0, lo = 1e300, hi = -1e300;
        for (int cell = 0; cell < 4; ++cell) {
          const double x = b.values[static_cast<std::size_t>((i * 3 + c) * 4 + cell)];
          s += x;
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        CHECK(m.values(i, c) == doctest::Approx(s / 4).epsilon(1e-14));
        CHECK(m.values(i, c) >= lo);
        CHECK(m.values(i, c) <= hi);
      }
  }
  SUBCASE("zero cells is a data error") {
    FeatureMapBlock b{1, 1, 0, {}, {}};
    CHECK(kind_of([&] { global_average_pool(b); }) == ErrorKind::Data);
  }
}

TEST_CASE("feature map file roundtrip then pooling") {
  TempDir dir;
  FeatureMapBlock b{3, 2, 49, {}, {"p", "q", "r"}};
  Rng rng(1);
  for (int i = 0; i < 3 * 2 * 49; ++i) b.values.push_back(rng.uniform());
  write_feature_maps(b, dir / "maps.delm");
  const auto back = read_feature_maps(dir / "maps.delm");
  CHECK(back.values == b.values);
  CHECK(back.ids == b.ids);
  CHECK(global_average_pool(back).ids == b.ids);
}

TEST_CASE("label manifest parsing and alignment") {
  TempDir dir;
  write_text(dir / "labels.csv", "id,style,genre\na,Cubism,portrait\nb,,landscape\nc,Baroque,\n");
  const auto manifest = read_label_manifest(dir / "labels.csv");
  REQUIRE(manifest.style);
  CHECK(manifest.style->class_names == std::vector<std::string>{"Baroque", "Cubism"});
  CHECK(manifest.style->labels == Labels{1, -1, 0});

  const auto m = make_features(Matrix::Zero(4, 1), {"c", "b", "a", "z"});
  const auto style = align_labels(manifest, m, "style");
  CHECK(style.labels == Labels{0, -1, 1, -1});
  const auto genre = align_labels(manifest, m, "genre");
  CHECK(genre.labels == Labels{-1, 0, 1, -1});

  const auto small = make_features(Matrix::Zero(1, 1), {"a"});
  CHECK(kind_of([&] { align_labels(manifest, small, "style"); }) == ErrorKind::Data);
  CHECK(kind_of([&] { align_labels(manifest, m, "era"); }) == ErrorKind::Config);
}

TEST_CASE("assignment file roundtrip and validation") {
  TempDir dir;
  ClusterAssignments a;
  a.ids = {"x", "y"};
  a.hard = {1, 0};
  Matrix q(2, 2);
  q << 0.25, 0.75, 0.6, 0.4;
  a.q = q;
  write_assignments(a, dir / "a.csv");
  CHECK(read_bytes(dir / "a.csv") == "id,cluster,q_0,q_1\nx,1,0.25,0.75\ny,0,0.6,0.4\n");
  const auto back = read_assignments(dir / "a.csv");
  CHECK(back.hard == a.hard);
  CHECK(back.k == 2);
  CHECK(*back.q == q);

  write_text(dir / "bad.csv", "id,cluster,q_0,q_1\nx,0,0.5,0.6\n");
  CHECK(kind_of([&] { read_assignments(dir / "bad.csv"); }) == ErrorKind::Data);
  write_text(dir / "bad2.csv", "id,cluster,q_0,q_1\nx,2,0.5,0.5\n");
  CHECK(kind_of([&] { read_assignments(dir / "bad2.csv"); }) == ErrorKind::Data);
}

TEST_CASE("stratified sampling") {
  Matrix v(100, 1);
  Labels labels;
  for (int i = 0; i < 100; ++i) {
    v(i, 0) = i;
    labels.push_back(i % 2);
  }
  const auto m = make_features(v);

  SUBCASE("fraction 1 keeps every row in order") {
    const auto s = stratified_sample(m, labels, 1.0, 3);
    REQUIRE(s.rows.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(s.rows[i] == i);
  }
  SUBCASE("10% of two balanced classes is 5 per class") {
    const auto s = stratified_sample(m, labels, 0.1, 3);
    std::map<int, int> per_class;
    for (auto r : s.rows) ++per_class[labels[r]];
    CHECK(per_class[0] == 5);
    CHECK(per_class[1] == 5);
    CHECK(s.matrix.n() == 10);
  }
  SUBCASE("same seed, same selection; class ratio preserved for any seed") {
    CHECK(stratified_sample(m, labels, 0.3, 8).rows == stratified_sample(m, labels, 0.3, 8).rows);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = stratified_sample(m, labels, 0.3, seed);
      int c0 = 0;
      for (auto r : s.rows) c0 += labels[r] == 0;
      CHECK(std::abs(c0 - 15) <= 1);
      CHECK(std::abs(static_cast<int>(s.rows.size()) - c0 - 15) <= 1);
    }
  }
  SUBCASE("missing labels are a data error") {
    Labels partial = labels;
    partial[4] = -1;
    CHECK(kind_of([&] { stratified_sample(m, partial, 0.5, 1); }) == ErrorKind::Data);
    CHECK(kind_of([&] { stratified_sample(m, Labels{0, 1}, 0.5, 1); }) == ErrorKind::Data);
  }
}
