#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lotcyto/classify.hpp"
#include "lotcyto/io.hpp"
#include "lotcyto/mst.hpp"

namespace lotcyto {

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// DOT text for an MST. With `masses`, each node label carries the sample's
/// mass in that Voronoi cell and the node width grows with it.
inline std::string mst_to_dot(const Mst& tree, const std::optional<Weights>& masses = std::nullopt,
                              const std::string& name = "mst") {
  std::string out = "graph \"" + detail::xml_escape(name) + "\" {\n  node [shape=circle, style=filled, fillcolor=\"#9ecae1\"];\n";
  for (Eigen::Index v = 0; v < tree.nodes; ++v) {
    out += "  " + std::to_string(v) + " [label=\"" + std::to_string(v);
    if (masses) {
      const double m = (*masses)[v];
      out += "\\n" + detail::fixed(m, 4) + "\", width=" + detail::fixed(0.2 + 2.0 * std::sqrt(m), 3);
    } else {
      out += "\"";
    }
    out += "];\n";
  }
  for (const auto& e : tree.edges)
    out += "  " + std::to_string(e.u) + " -- " + std::to_string(e.v) + " [weight=" +
           io::format_double(e.weight) + "];\n";
  out += "}\n";
  return out;
}

struct ScatterPoint {
  double x = 0.0, y = 0.0;
  std::string group;             // legend entry and colour
  std::optional<double> size_value;  // MRD value; drawn through logicle_scale
  std::string title;             // hover text
};

/// Minimal static scatter plot: framed axes, one colour per group, a legend,
/// and circle radii that grow with logicle_scale of the size value.
inline std::string scatter_svg(const std::vector<ScatterPoint>& pts, const std::string& x_label,
                               const std::string& y_label) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double width = 640, height = 480, left = 60, right = 150, top = 20, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts.front().x;
    y0 = y1 = pts.front().y;
    for (const auto& p : pts) {
      x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
    }
  }
  const auto pad = [](double& lo, double& hi) {
    const double span = hi - lo > 0 ? hi - lo : 1.0;
    lo -= 0.05 * span;
    hi += 0.05 * span;
  };
  pad(x0, x1);
  pad(y0, y1);
  const auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  const auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::map<std::string, std::size_t> colour;
  for (const auto& p : pts) colour.emplace(p.group, 0);
  {
    std::size_t i = 0;
    for (auto& [g, c] : colour) c = i++ % std::size(palette);
  }

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s += "<rect x=\"" + detail::fixed(left) + "\" y=\"" + detail::fixed(top) + "\" width=\"" +
       detail::fixed(pw) + "\" height=\"" + detail::fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
    s += "<text x=\"" + detail::fixed(sx(xv)) + "\" y=\"" + detail::fixed(top + ph + 16) +
         "\" font-size=\"10\" text-anchor=\"middle\">" + detail::fixed(xv) + "</text>\n";
    s += "<text x=\"" + detail::fixed(left - 6) + "\" y=\"" + detail::fixed(sy(yv) + 3) +
         "\" font-size=\"10\" text-anchor=\"end\">" + detail::fixed(yv) + "</text>\n";
  }
  s += "<text x=\"" + detail::fixed(left + pw / 2) + "\" y=\"" + detail::fixed(height - 12) +
       "\" font-size=\"12\" text-anchor=\"middle\">" + detail::xml_escape(x_label) + "</text>\n";
  s += "<text x=\"14\" y=\"" + detail::fixed(top + ph / 2) +
       "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       detail::fixed(top + ph / 2) + ")\">" + detail::xml_escape(y_label) + "</text>\n";

  for (const auto& p : pts) {
    const double r = p.size_value ? 3.0 + 4.0 * logicle_scale(*p.size_value) : 4.0;
    s += "<circle cx=\"" + detail::fixed(sx(p.x)) + "\" cy=\"" + detail::fixed(sy(p.y)) + "\" r=\"" +
         detail::fixed(std::max(r, 1.0)) + "\" fill=\"" + palette[colour[p.group]] +
         "\" fill-opacity=\"0.75\" stroke=\"black\" stroke-width=\"0.5\"><title>" +
         detail::xml_escape(p.title) + "</title></circle>\n";
  }
  double ly = top + 10;
  for (const auto& [g, c] : colour) {
    s += "<circle cx=\"" + detail::fixed(width - right + 20) + "\" cy=\"" + detail::fixed(ly) +
         "\" r=\"5\" fill=\"" + palette[c] + "\"/>\n";
    s += "<text x=\"" + detail::fixed(width - right + 32) + "\" y=\"" + detail::fixed(ly + 4) +
         "\" font-size=\"11\">" + detail::xml_escape(g.empty() ? "(none)" : g) + "</text>\n";
    ly += 18;
  }
  s += "</svg>\n";
  return s;
}

}  // namespace lotcyto
