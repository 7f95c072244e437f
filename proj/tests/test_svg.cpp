// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "delius/error.hpp"
#include "delius/svg.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace delius;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t c = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++c;
  return c;
}

}  // namespace

TEST_CASE("three points in two clusters") {
  svg::ScatterSpec spec;
  spec.points.resize(3, 2);
  spec.points << 0, 0, 1, 1, 2, 0;
  spec.labels = {0, 0, 1};
  spec.title = "a < b & c";
  const auto doc = svg::render_scatter(spec);
  CHECK(count(doc, "<circle") == 3);
  std::set<std::string> fills;
  for (auto pos = doc.find("<circle"); pos != std::string::npos; pos = doc.find("<circle", pos + 1)) {
    const auto f = doc.find("fill=\"", pos) + 6;
    fills.insert(doc.substr(f, doc.find('"', f) - f));
  }
  CHECK(fills.size() == 2);
  std::string why;
  CHECK_MESSAGE(oracle::well_formed_xml(doc, &why), why);
}

TEST_CASE("byte-identical output for identical input") {
  svg::ScatterSpec spec;
  spec.points = delius::testing::random_matrix(50, 2, 1);
  for (int i = 0; i < 50; ++i) spec.labels.push_back(i % 7);
  CHECK(svg::render_scatter(spec) == svg::render_scatter(spec));
}

TEST_CASE("1000 points render to well-formed XML") {
  svg::ScatterSpec spec;
  spec.points = delius::testing::random_matrix(1000, 2, 2, 30.0);
  for (int i = 0; i < 1000; ++i) spec.labels.push_back(i % 25);
  const auto doc = svg::render_scatter(spec);
  CHECK(count(doc, "<circle") == 1000);
  std::string why;
  CHECK_MESSAGE(oracle::well_formed_xml(doc, &why), why);
}

TEST_CASE("degenerate inputs") {
  svg::ScatterSpec spec;
  spec.points = Matrix::Constant(4, 2, 3.0);
  spec.labels = {0, 1, 2, 3};
  const auto doc = svg::render_scatter(spec);
  CHECK(oracle::well_formed_xml(doc));
  CHECK(doc.find("nan") == std::string::npos);

  spec.points(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svg::render_scatter(spec), Error);
}
