// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "delius/rng.hpp"

using delius::Rng;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs |= va != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("xoshiro256++ stream is pinned for seed 0") {
  // Reference values from an independent Python evaluation of splitmix64
  // seeding followed by xoshiro256++.
  Rng rng(0);
  CHECK(rng.next_u64() == 0x53175d61490b23dfULL);
  CHECK(rng.next_u64() == 0x61da6f3dc380d507ULL);
  CHECK(rng.next_u64() == 0x5c0fdf91ec9a7bfcULL);
}

TEST_CASE("uniform and below stay in range") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(13) < 13);
  }
}

TEST_CASE("normal deviates have unit moments") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(3);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  CHECK(v != sorted);
}
