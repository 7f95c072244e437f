// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>

#include "delius/types.hpp"

namespace delius::svg {

struct ScatterSpec {
  Matrix points;  // n x 2
  Labels labels;  // cluster per point, >= 0
  int width = 800;
  int height = 800;
  double marker_radius = 3.0;
  std::string title;
};

/// 20-color categorical palette; cluster c uses palette()[c % 20].
const std::array<const char*, 20>& palette();

/// Standalone SVG 1.1 document: one <circle> per point, filled by cluster,
/// axes fitted to the data with a 5% margin. Output is a pure function of
/// the spec.
std::string render_scatter(const ScatterSpec& spec);

}  // namespace delius::svg
