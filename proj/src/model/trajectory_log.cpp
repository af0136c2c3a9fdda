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

#include "cmaml/model/trajectory_log.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cmaml::model {

void write_trajectory_csv(std::ostream& out, std::span<const Sample> samples) {
  out << kTrajectoryHeader << '\n';
  char buf[512];
  for (const Sample& s : samples) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", s.time,
                  s.state.phi, s.state.vx, s.state.vy, s.state.r, s.pose.x, s.pose.y, s.pose.psi, s.input.u1,
                  s.input.u2, s.surface);
    out << buf;
  }
}

std::vector<Sample> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) {
    throw std::runtime_error(std::string("trajectory csv: expected header '") + kTrajectoryHeader + "'");
  }
  std::vector<Sample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<double, 10> v{};
    std::istringstream fields(line);
    std::string cell;
    for (double& value : v) {
      if (!std::getline(fields, cell, ',')) {
        throw std::runtime_error("trajectory csv: too few columns on line " + std::to_string(line_no));
      }
      char* end = nullptr;
      value = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw std::runtime_error("trajectory csv: bad number on line " + std::to_string(line_no));
    }
    if (!std::getline(fields, cell, ',')) {
      throw std::runtime_error("trajectory csv: missing surface column on line " + std::to_string(line_no));
    }
    samples.push_back({v[0], {v[1], v[2], v[3], v[4]}, {v[5], v[6], v[7]}, {v[8], v[9]}, std::stoi(cell)});
  }
  return samples;
}

void save_trajectory_csv(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trajectory log for writing: " + path.string());
  write_trajectory_csv(out, samples);
}

std::vector<Sample> load_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory log: " + path.string());
  return read_trajectory_csv(in);
}

std::vector<std::vector<Sample>> split_segments(std::span<const Sample> samples, double dt) {
  std::vector<std::vector<Sample>> segments;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i == 0 || std::abs(samples[i].time - samples[i - 1].time - dt) > 1e-9) segments.emplace_back();
    segments.back().push_back(samples[i]);
  }
  return segments;
}

SampleWindow window_ending_at(std::span<const Sample> samples, std::size_t last, std::size_t n, double dt) {
  if (n == 0 || last >= samples.size() || last + 1 < n) throw std::out_of_range("window_ending_at: not enough samples");
  SampleWindow w;
  w.dt = dt;
  w.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(last + 1 - n),
                   samples.begin() + static_cast<std::ptrdiff_t>(last + 1));
  return w;
}

}  // namespace cmaml::model
