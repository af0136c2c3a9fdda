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
#include <span>
#include <vector>

#include "cmaml/model/types.hpp"

namespace cmaml::model {

/// Column order of the trajectory CSV. Values are written with 17
/// significant digits, so a write/read cycle is lossless.
inline constexpr const char* kTrajectoryHeader = "time,phi,vx,vy,r,x,y,psi,u1,u2,surface";

void write_trajectory_csv(std::ostream& out, std::span<const Sample> samples);
std::vector<Sample> read_trajectory_csv(std::istream& in);
void save_trajectory_csv(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> load_trajectory_csv(const std::filesystem::path& path);

/// Splits a log into runs of samples spaced exactly dt apart (to 1e-9 s).
std::vector<std::vector<Sample>> split_segments(std::span<const Sample> samples, double dt);

/// The N samples ending at index `last` as a window.
SampleWindow window_ending_at(std::span<const Sample> samples, std::size_t last, std::size_t n, double dt);

}  // namespace cmaml::model
