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

#include "cmaml/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace cmaml::harness {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::string tick_label(double v) {
  char buf[32];
  const double a = std::abs(v);
  if (a != 0.0 && (a < 1e-2 || a >= 1e5)) {
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
  }
  return buf;
}

}  // namespace

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::rect(double x, double y, double w, double h, const std::string& fill, double opacity) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" fill=\"" + fill + "\"";
  if (opacity < 1.0) body_ += " fill-opacity=\"" + num(opacity) + "\"";
  body_ += "/>\n";
}

void SvgDocument::line(double x0, double y0, double x1, double y1, const std::string& stroke, double width,
                       bool dashed) {
  body_ += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y1) +
           "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"";
  if (dashed) body_ += " stroke-dasharray=\"4 3\"";
  body_ += "/>\n";
}

void SvgDocument::polyline(std::span<const double> xs, std::span<const double> ys, const std::string& stroke,
                           double width) {
  if (xs.size() != ys.size()) throw std::invalid_argument("polyline: coordinate count mismatch");
  if (xs.empty()) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) body_ += ' ';
    body_ += num(xs[i]) + "," + num(ys[i]);
  }
  body_ += "\"/>\n";
}

void SvgDocument::circle(double cx, double cy, double r, const std::string& fill) {
  body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" + fill + "\"/>\n";
}

void SvgDocument::text(double x, double y, const std::string& s, double size, const std::string& anchor) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
           "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

std::string SvgDocument::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
         "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n<rect width=\"100%\" height=\"100%\" " +
         "fill=\"white\"/>\n" + body_ + "</svg>\n";
}

void SvgDocument::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << str();
  if (!out) throw std::runtime_error("error writing " + path.string());
}

double PlotFrame::px(double x) const { return left + (x - x_min) / (x_max - x_min) * width; }

double PlotFrame::py(double y) const { return top + height - (y - y_min) / (y_max - y_min) * height; }

void draw_axes(SvgDocument& doc, const PlotFrame& f, const std::string& x_label, const std::string& y_label,
               int ticks) {
  doc.line(f.left, f.top + f.height, f.left + f.width, f.top + f.height, "black");
  doc.line(f.left, f.top, f.left, f.top + f.height, "black");
  for (int i = 0; i <= ticks; ++i) {
    const double xv = f.x_min + (f.x_max - f.x_min) * i / ticks;
    const double yv = f.y_min + (f.y_max - f.y_min) * i / ticks;
    const double x = f.px(xv), y = f.py(yv);
    doc.line(x, f.top + f.height, x, f.top + f.height + 4, "black");
    doc.text(x, f.top + f.height + 16, tick_label(xv), 10, "middle");
    doc.line(f.left - 4, y, f.left, y, "black");
    doc.text(f.left - 6, y + 3, tick_label(yv), 10, "end");
  }
  doc.text(f.left + f.width / 2, f.top + f.height + 32, x_label, 12, "middle");
  doc.text(f.left, f.top - 8, y_label, 12, "start");
}

void plot_series(SvgDocument& doc, const PlotFrame& f, std::span<const double> xs, std::span<const double> ys,
                 const std::string& color, double width) {
  std::vector<double> px, py;
  px.reserve(xs.size());
  py.reserve(ys.size());
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    px.push_back(f.px(xs[i]));
    py.push_back(f.py(std::clamp(ys[i], f.y_min, f.y_max)));
  }
  doc.polyline(px, py, color, width);
}

void draw_legend(SvgDocument& doc, double x, double y, const std::vector<std::string>& labels,
                 const std::vector<std::string>& colors) {
  for (std::size_t i = 0; i < labels.size() && i < colors.size(); ++i) {
    const double yy = y + 16.0 * static_cast<double>(i);
    doc.line(x, yy - 4, x + 18, yy - 4, colors[i], 2.0);
    doc.text(x + 24, yy, labels[i], 11);
  }
}

double nice_ceiling(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * p >= v) return m * p;
  }
  return 10.0 * p;
}

std::string mode_color(const std::string& mode) {
  if (mode == "fixed") return "#1f77b4";
  if (mode == "gd") return "#ff7f0e";
  if (mode == "cmaml") return "#2ca02c";
  return "#7f7f7f";
}

}  // namespace cmaml::harness
