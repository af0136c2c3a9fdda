// Copyright 2026 The cmaml-mppi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>

#include "cmaml/nn/mlp.hpp"

namespace cmaml::nn {

/// Per-input standardization, computed once from training data and frozen.
struct InputNormalizer {
  Vector mean;
  Vector stddev;

  static InputNormalizer identity(int n);
  /// Column-sample statistics; channels with zero spread get stddev 1.
  static InputNormalizer fit(const Eigen::Ref<const Matrix>& samples);

  [[nodiscard]] Vector apply(const Eigen::Ref<const Vector>& raw) const;
  bool operator==(const InputNormalizer& other) const;
};

struct Checkpoint {
  MlpParams params;
  InputNormalizer normalizer;
};

// Text format, version 1. Doubles are written as hex floats so the
// round trip is bit-exact:
//
//   cmaml-checkpoint 1
//   shape <in> <h1> <h2> <out>
//   norm_mean <in values>
//   norm_std <in values>
//   params <count>
//   <one value per line>
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cmaml::nn
