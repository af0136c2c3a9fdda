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

// Field-list driven JSON encoding. A struct opts in by declaring
// `template <class V> void fields(V& v, T& x)` in cmaml::harness::detail
// that calls v("key", member) once per member.

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmaml/adapt/adaptation.hpp"
#include "cmaml/harness/closed_loop.hpp"

namespace cmaml::harness::detail {

using nlohmann::json;

struct Writer;

inline std::string layout_name(SurfaceLayout l) { return l == SurfaceLayout::kCement ? "cement" : "two-surface"; }

inline SurfaceLayout parse_layout(const std::string& s) {
  if (s == "cement") return SurfaceLayout::kCement;
  if (s == "two-surface") return SurfaceLayout::kTwoSurface;
  throw std::invalid_argument("unknown surface layout '" + s + "' (expected cement or two-surface)");
}

template <class T>
concept Described = requires(T& t, Writer& probe) { fields(probe, t); };

inline json encode(double x) { return x; }
inline json encode(int x) { return x; }
inline json encode(bool x) { return x; }
inline json encode(std::uint64_t x) { return x; }
inline json encode(const std::string& x) { return x; }
inline json encode(const std::filesystem::path& x) { return x.generic_string(); }
inline json encode(adapt::AdaptMode x) { return std::string(adapt::to_string(x)); }
inline json encode(adapt::MetaGradientMode x) { return std::string(adapt::to_string(x)); }
inline json encode(SurfaceLayout x) { return layout_name(x); }

template <class T>
json encode(std::vector<T>& xs);

template <class T>
  requires Described<T>
json encode(T& x);

template <class T>
json encode(std::vector<T>& xs) {
  json arr = json::array();
  for (auto& x : xs) arr.push_back(encode(x));
  return arr;
}

struct Writer {
  json& out;
  template <class T>
  void operator()(const char* key, T& x) {
    out[key] = encode(x);
  }
};

template <class T>
  requires Described<T>
json encode(T& x) {
  json j = json::object();
  Writer w{j};
  fields(w, x);
  return j;
}

[[noreturn]] inline void type_error(const std::string& path, const char* expected) {
  throw std::invalid_argument("config: " + path + " must be " + expected);
}

inline void decode(const json& j, double& x, const std::string& path) {
  if (!j.is_number()) type_error(path, "a number");
  x = j.get<double>();
}
inline void decode(const json& j, int& x, const std::string& path) {
  if (!j.is_number_integer()) type_error(path, "an integer");
  x = j.get<int>();
}
inline void decode(const json& j, bool& x, const std::string& path) {
  if (!j.is_boolean()) type_error(path, "a boolean");
  x = j.get<bool>();
}
inline void decode(const json& j, std::uint64_t& x, const std::string& path) {
  if (!j.is_number_unsigned()) type_error(path, "a non-negative integer");
  x = j.get<std::uint64_t>();
}
inline void decode(const json& j, std::string& x, const std::string& path) {
  if (!j.is_string()) type_error(path, "a string");
  x = j.get<std::string>();
}
inline void decode(const json& j, std::filesystem::path& x, const std::string& path) {
  if (!j.is_string()) type_error(path, "a path string");
  x = j.get<std::string>();
}
inline void decode(const json& j, adapt::AdaptMode& x, const std::string& path) {
  if (!j.is_string()) type_error(path, "a mode name");
  x = adapt::parse_adapt_mode(j.get<std::string>());
}
inline void decode(const json& j, adapt::MetaGradientMode& x, const std::string& path) {
  if (!j.is_string()) type_error(path, "a meta-gradient mode name");
  x = adapt::parse_meta_gradient_mode(j.get<std::string>());
}
inline void decode(const json& j, SurfaceLayout& x, const std::string& path) {
  if (!j.is_string()) type_error(path, "a layout name");
  x = parse_layout(j.get<std::string>());
}

template <class T>
  requires Described<T>
void decode(const json& j, T& x, const std::string& path);

template <class T>
void decode(const json& j, std::vector<T>& xs, const std::string& path) {
  if (!j.is_array()) type_error(path, "an array");
  xs.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T x{};
    decode(j[i], x, path + "[" + std::to_string(i) + "]");
    xs.push_back(std::move(x));
  }
}

struct Reader {
  const json& in;
  std::string path;
  std::set<std::string> known;
  template <class T>
  void operator()(const char* key, T& x) {
    known.insert(key);
    if (auto it = in.find(key); it != in.end()) decode(*it, x, path + "." + key);
  }
};

template <class T>
  requires Described<T>
void decode(const json& j, T& x, const std::string& path) {
  if (!j.is_object()) type_error(path, "an object");
  Reader r{j, path, {}};
  fields(r, x);
  for (const auto& item : j.items()) {
    if (!r.known.contains(item.key())) throw std::invalid_argument("config: unknown key " + path + "." + item.key());
  }
}


/// Encodes a described struct.
template <class T>
json to_json_object(const T& x) {
  T copy = x;
  return encode(copy);
}

/// Decodes a described struct; missing keys keep their defaults, unknown
/// keys throw std::invalid_argument.
template <class T>
T from_json_object(const json& j, const std::string& name) {
  T x{};
  decode(j, x, name);
  return x;
}

}  // namespace cmaml::harness::detail
