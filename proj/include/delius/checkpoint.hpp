// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "delius/neural.hpp"

namespace delius::nn {

/// Contents of a DELC container.
///
/// Layout: "DELC", u16 version (1), u64 preamble length, UTF-8 JSON preamble,
/// then one block per tensor (u64 element count + little-endian f64 values):
/// weights and bias of every encoder layer, then every decoder layer, then
/// the centroid matrix when present. The preamble records layer widths,
/// activations, encoder depth, seed, training phase and epoch.
struct Checkpoint {
  Mlp encoder;
  std::optional<Mlp> decoder;
  std::optional<Matrix> centroids;  // k x latent
  std::uint64_t seed = 0;
  std::string phase;  // "pretrain" or "cluster"
  std::uint64_t epoch = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace delius::nn
