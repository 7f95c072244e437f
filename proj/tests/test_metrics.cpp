// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "delius/error.hpp"
#include "delius/metrics.hpp"
#include "delius/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace delius;
using namespace delius::metrics;

namespace {

Labels random_labels(std::size_t n, int k, Rng& rng) {
  // Every label appears at least once.
  Labels l(n);
  for (std::size_t i = 0; i < n; ++i)
    l[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i) : static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  rng.shuffle(std::span<int>(l));
  return l;
}

bool config_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == ErrorKind::Config;
  }
  return false;
}

}  // namespace

TEST_CASE("silhouette") {
  SUBCASE("coincident duplicates in two separated clusters") {
    Matrix x(4, 2);
    x << 0, 0, 0, 0, 5, 5, 5, 5;
    CHECK(silhouette(x, Labels{0, 0, 1, 1}) == 1.0);
  }
  SUBCASE("hand-computed case with a singleton") {
    Matrix x(3, 2);
    x << 0, 0, 1, 0, 0.5, 10;
    const Labels l{0, 0, 1};
    const auto s = silhouette_samples(x, l);
    const double expect = 1.0 - 1.0 / std::sqrt(100.25);
    CHECK(std::abs(s[0] - expect) < 1e-12);
    CHECK(std::abs(s[1] - expect) < 1e-12);
    CHECK(s[2] == 0.0);
    CHECK(std::abs(silhouette(x, l) - 2.0 * expect / 3.0) < 1e-12);
  }
  SUBCASE("random n=30 against brute force") {
    Rng rng(3);
    const Matrix x = delius::testing::random_matrix(30, 4, 3);
    const Labels l = random_labels(30, 4, rng);
    CHECK(std::abs(silhouette(x, l) - oracle::silhouette(x, l)) < 1e-12);
  }
  SUBCASE("values stay in [-1, 1]") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const Matrix x = delius::testing::random_matrix(25, 3, 100 + t);
      for (double v : silhouette_samples(x, random_labels(25, 5, rng))) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SUBCASE("label count out of range") {
    const Matrix x = delius::testing::random_matrix(4, 2, 5);
    CHECK(config_error([&] { silhouette(x, Labels{0, 0, 0, 0}); }));
    CHECK(config_error([&] { silhouette(x, Labels{0, 1, 2, 3}); }));
  }
}

TEST_CASE("calinski_harabasz") {
  Matrix x(4, 2);
  x << 0, 0, 0, 2, 10, 0, 10, 2;
  const Labels l{0, 0, 1, 1};
  SUBCASE("hand-computed value") {
    const auto chi = calinski_harabasz(x, l);
    CHECK_FALSE(chi.infinite);
    CHECK(chi.value == doctest::Approx(50.0).epsilon(1e-12));
  }
  SUBCASE("translation, scaling, rotation") {
    Matrix shifted = x;
    shifted.rowwise() += RowVector::Map(std::array{5.0, -3.0}.data(), 2);
    CHECK(calinski_harabasz(shifted, l).value == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(calinski_harabasz(x * 7.5, l).value == doctest::Approx(50.0).epsilon(1e-12));
    Rng rng(6);
    const Matrix y = delius::testing::random_matrix(40, 3, 6);
    const Labels ly = random_labels(40, 4, rng);
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(1.1, Eigen::Vector3d(0.3, -1, 2).normalized()).toRotationMatrix();
    const double base = calinski_harabasz(y, ly).value;
    CHECK(oracle::rel_err(calinski_harabasz(y * rot.transpose(), ly).value, base) < 1e-9);
    CHECK(oracle::rel_err(base, oracle::calinski_harabasz(y, ly)) < 1e-9);
  }
  SUBCASE("collapsed clusters are flagged infinite") {
    Matrix c(4, 2);
    c << 1, 1, 1, 1, 3, 3, 3, 3;
    const auto chi = calinski_harabasz(c, l);
    CHECK(chi.infinite);
    CHECK(std::isinf(chi.value));
  }
}

TEST_CASE("clustering_accuracy") {
  CHECK(clustering_accuracy(Labels{0, 0, 1, 1}, Labels{1, 1, 0, 0}) == 1.0);
  CHECK(clustering_accuracy(Labels{0, 0, 1, 1}, Labels{0, 1, 0, 1}) == 0.5);
  SUBCASE("exhaustive enumeration, n=12, 3 classes, 4 clusters") {
    Rng rng(7);
    for (int t = 0; t < 30; ++t) {
      const Labels y = random_labels(12, 3, rng);
      const Labels c = random_labels(12, 4, rng);
      CHECK(clustering_accuracy(y, c) == oracle::clustering_accuracy(y, c));
    }
  }
  SUBCASE("more classes than clusters") {
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
      const Labels y = random_labels(15, 5, rng);
      const Labels c = random_labels(15, 2, rng);
      CHECK(clustering_accuracy(y, c) == oracle::clustering_accuracy(y, c));
    }
  }
  SUBCASE("invariant under renaming clusters and classes") {
    Rng rng(9);
    const Labels y = random_labels(40, 4, rng);
    const Labels c = random_labels(40, 5, rng);
    const double base = clustering_accuracy(y, c);
    std::vector<int> py{2, 0, 3, 1}, pc{4, 2, 0, 1, 3};
    Labels y2(y), c2(c);
    for (auto& v : y2) v = py[static_cast<std::size_t>(v)];
    for (auto& v : c2) v = pc[static_cast<std::size_t>(v)];
    CHECK(clustering_accuracy(y2, c2) == base);
  }
  SUBCASE("unlabeled entries are skipped") {
    CHECK(clustering_accuracy(Labels{0, -1, 1, -1}, Labels{1, 1, 0, 0}) == 1.0);
  }
  SUBCASE("errors") {
    CHECK(config_error([] { clustering_accuracy(Labels{}, Labels{}); }));
    bool shape = false;
    try {
      clustering_accuracy(Labels{0, 1}, Labels{0});
    } catch (const Error& e) {
      shape = e.kind() == ErrorKind::Shape || e.kind() == ErrorKind::Config;
    }
    CHECK(shape);
  }
}

TEST_CASE("max_weight_matching") {
  const std::vector<std::vector<double>> w{{1, 9, 3}, {8, 2, 7}, {4, 6, 5}};
  const auto m = max_weight_matching(w);
  // Best: 0->1 (9), 1->0 (8), 2->2 (5) = 22.
  CHECK(m == std::vector<int>{1, 0, 2});
}

TEST_CASE("evaluate and report serialization") {
  const auto data = delius::testing::make_blobs(60, 4, 3, 10.0, 0.5, 2);
  Labels genre(data.labels.size(), -1);
  for (std::size_t i = 0; i < genre.size(); i += 2) genre[i] = data.labels[i];
  auto rep = evaluate(data.x, data.labels, "embedded", LabelSet{data.labels, genre});
  CHECK(rep.k == 3);
  CHECK(rep.n == 60);
  CHECK(rep.space_dim == 4);
  CHECK(*rep.acc_style == 1.0);
  CHECK(*rep.acc_genre == 1.0);
  CHECK(rep.sc > 0.8);
  const auto j = nlohmann::json::parse(to_json(rep));
  CHECK(j.at("space_tag") == "embedded");
  CHECK(j.at("k") == 3);
  CHECK(j.at("chi_infinite") == false);
  CHECK(j.at("sc").get<double>() == rep.sc);
  CHECK_FALSE(j.contains("strategy"));
  const auto no_truth = evaluate(data.x, data.labels, "embedded");
  const auto j2 = nlohmann::json::parse(to_json(no_truth));
  CHECK(j2.at("acc_style").is_null());
}

TEST_CASE("50 random instances agree with brute-force oracles") {
  Rng rng(2024);
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<std::size_t>(10 + rng.below(41));
    const int k = 2 + static_cast<int>(rng.below(4));
    const Matrix x = delius::testing::random_matrix(n, 1 + rng.below(6), 500 + static_cast<std::uint64_t>(t));
    const Labels l = random_labels(n, k, rng);
    CHECK(std::abs(silhouette(x, l) - oracle::silhouette(x, l)) <= 1e-9);
    CHECK(std::abs(calinski_harabasz(x, l).value - oracle::calinski_harabasz(x, l)) <= 1e-9 * std::max(1.0, oracle::calinski_harabasz(x, l)));
    const Labels truth = random_labels(n, 1 + static_cast<int>(rng.below(4)), rng);
    CHECK(clustering_accuracy(truth, l) == oracle::clustering_accuracy(truth, l));
  }
}
