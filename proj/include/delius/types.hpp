// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace delius {

// Samples are rows. Row-major storage keeps a sample contiguous in memory and
// matches the on-disk payload order.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Labels = std::vector<int>;

}  // namespace delius
