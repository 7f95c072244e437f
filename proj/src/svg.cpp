// SPDX-License-Identifier: Apache-2.0
#include "delius/svg.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "delius/error.hpp"

namespace delius::svg {
namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo, hi;
};

Range padded(double lo, double hi) {
  double span = hi - lo;
  if (span <= 0.0) span = std::max(1.0, std::abs(lo));
  const double mid = 0.5 * (lo + hi);
  if (hi - lo <= 0.0) return {mid - 0.55 * span, mid + 0.55 * span};
  return {lo - 0.05 * span, hi + 0.05 * span};
}

}  // namespace

const std::array<const char*, 20>& palette() {
  static const std::array<const char*, 20> colors = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
      "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896",
      "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5"};
  return colors;
}

std::string render_scatter(const ScatterSpec& spec) {
  require(spec.points.cols() == 2, ErrorKind::Shape, "scatter points must be 2-D");
  require(spec.labels.size() == static_cast<std::size_t>(spec.points.rows()), ErrorKind::Shape,
          "one label per point required");
  require(spec.width > 0 && spec.height > 0 && spec.marker_radius > 0.0, ErrorKind::Config,
          "plot size and marker radius must be positive");
  for (Eigen::Index i = 0; i < spec.points.rows(); ++i) {
    if (!std::isfinite(spec.points(i, 0)) || !std::isfinite(spec.points(i, 1)))
      fail(ErrorKind::Data, "non-finite plot coordinate in row " + std::to_string(i));
    if (spec.labels[static_cast<std::size_t>(i)] < 0)
      fail(ErrorKind::Data, "negative cluster label in row " + std::to_string(i));
  }

  Range xr{0.0, 1.0}, yr{0.0, 1.0};
  if (spec.points.rows() > 0) {
    xr = padded(spec.points.col(0).minCoeff(), spec.points.col(0).maxCoeff());
    yr = padded(spec.points.col(1).minCoeff(), spec.points.col(1).maxCoeff());
  }
  const double w = spec.width, h = spec.height;
  auto px = [&](double x) { return (x - xr.lo) / (xr.hi - xr.lo) * w; };
  auto py = [&](double y) { return h - (y - yr.lo) / (yr.hi - yr.lo) * h; };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(spec.width) + "\" height=\"" + std::to_string(spec.height) +
         "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
  if (!spec.title.empty()) out += "  <title>" + escape(spec.title) + "</title>\n";
  out += "  <rect x=\"0\" y=\"0\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
         std::to_string(spec.height) + "\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  // Axis lines through the data origin when it is inside the view.
  out += "  <g stroke=\"#bbbbbb\" stroke-width=\"0.5\">\n";
  if (xr.lo < 0.0 && xr.hi > 0.0)
    out += "    <line x1=\"" + fixed(px(0.0)) + "\" y1=\"0\" x2=\"" + fixed(px(0.0)) + "\" y2=\"" +
           std::to_string(spec.height) + "\"/>\n";
  if (yr.lo < 0.0 && yr.hi > 0.0)
    out += "    <line x1=\"0\" y1=\"" + fixed(py(0.0)) + "\" x2=\"" + std::to_string(spec.width) +
           "\" y2=\"" + fixed(py(0.0)) + "\"/>\n";
  out += "  </g>\n";
  out += "  <g stroke=\"none\" fill-opacity=\"0.8\">\n";
  const std::string r = fixed(spec.marker_radius);
  for (Eigen::Index i = 0; i < spec.points.rows(); ++i) {
    const int label = spec.labels[static_cast<std::size_t>(i)];
    out += "    <circle cx=\"" + fixed(px(spec.points(i, 0))) + "\" cy=\"" +
           fixed(py(spec.points(i, 1))) + "\" r=\"" + r + "\" fill=\"" +
           palette()[static_cast<std::size_t>(label) % palette().size()] + "\" data-cluster=\"" +
           std::to_string(label) + "\"/>\n";
  }
  out += "  </g>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace delius::svg
