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

#include "cmaml/nn/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <ios>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cmaml::nn {

InputNormalizer InputNormalizer::identity(int n) { return {Vector::Zero(n), Vector::Ones(n)}; }

InputNormalizer InputNormalizer::fit(const Eigen::Ref<const Matrix>& samples) {
  if (samples.cols() == 0) throw std::invalid_argument("InputNormalizer::fit: no samples");
  InputNormalizer norm;
  norm.mean = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - norm.mean;
  norm.stddev = (centered.array().square().rowwise().sum() / static_cast<double>(samples.cols())).sqrt();
  for (Eigen::Index i = 0; i < norm.stddev.size(); ++i) {
    if (!(norm.stddev[i] > 1e-12)) norm.stddev[i] = 1.0;
  }
  return norm;
}

Vector InputNormalizer::apply(const Eigen::Ref<const Vector>& raw) const {
  return ((raw - mean).array() / stddev.array()).matrix();
}

bool InputNormalizer::operator==(const InputNormalizer& other) const {
  return mean.size() == other.mean.size() && stddev.size() == other.stddev.size() &&
         (mean.array() == other.mean.array()).all() && (stddev.array() == other.stddev.array()).all();
}

namespace {

constexpr const char* kMagic = "cmaml-checkpoint";
constexpr int kVersion = 1;

void write_values(std::ostream& out, const Vector& v, char sep) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << std::hexfloat << v[i] << (i + 1 == v.size() ? '\n' : sep);
  }
  out << std::defaultfloat;
}

double read_double(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error("checkpoint: unexpected end of input");
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw std::runtime_error("checkpoint: bad number '" + token + "'");
  return value;
}

void expect(std::istream& in, const std::string& keyword) {
  std::string token;
  if (!(in >> token) || token != keyword) {
    throw std::runtime_error("checkpoint: expected '" + keyword + "', found '" + token + "'");
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const MlpShape& s = ckpt.params.shape();
  out << kMagic << ' ' << kVersion << '\n';
  out << "shape " << s.input << ' ' << s.hidden1 << ' ' << s.hidden2 << ' ' << s.output << '\n';
  out << "norm_mean ";
  write_values(out, ckpt.normalizer.mean, ' ');
  out << "norm_std ";
  write_values(out, ckpt.normalizer.stddev, ' ');
  out << "params " << ckpt.params.size() << '\n';
  write_values(out, ckpt.params.values(), '\n');
}

Checkpoint read_checkpoint(std::istream& in) {
  expect(in, kMagic);
  int version = 0;
  if (!(in >> version) || version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  expect(in, "shape");
  MlpShape shape;
  if (!(in >> shape.input >> shape.hidden1 >> shape.hidden2 >> shape.output)) {
    throw std::runtime_error("checkpoint: malformed shape line");
  }
  InputNormalizer norm{Vector(shape.input), Vector(shape.input)};
  expect(in, "norm_mean");
  for (int i = 0; i < shape.input; ++i) norm.mean[i] = read_double(in);
  expect(in, "norm_std");
  for (int i = 0; i < shape.input; ++i) norm.stddev[i] = read_double(in);
  expect(in, "params");
  std::size_t count = 0;
  if (!(in >> count) || count != shape.param_count()) throw std::runtime_error("checkpoint: parameter count mismatch");
  Vector values(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) values[static_cast<Eigen::Index>(i)] = read_double(in);
  return {MlpParams(shape, std::move(values)), std::move(norm)};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, ckpt);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

}  // namespace cmaml::nn
