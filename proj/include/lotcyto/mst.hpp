#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "lotcyto/measure.hpp"
#include "lotcyto/quantize.hpp"

namespace lotcyto {

struct MstEdge {
  Eigen::Index u = 0;
  Eigen::Index v = 0;
  double weight = 0.0;  // |x_u - x_v|^2
};

struct Mst {
  Eigen::Index nodes = 0;
  std::vector<MstEdge> edges;
  double total_weight = 0.0;
};

/// Minimum spanning tree of the complete graph on the centers with squared
/// Euclidean edge weights (Kruskal; ties broken by (u, v) index order).
inline Mst mst(const Points& support) {
  const Eigen::Index k = support.rows();
  if (k < 1) throw InvalidInput("mst: needs at least one center");

  std::vector<MstEdge> edges;
  edges.reserve(static_cast<std::size_t>(k * (k - 1) / 2));
  for (Eigen::Index u = 0; u < k; ++u)
    for (Eigen::Index v = u + 1; v < k; ++v) {
      const double w = (support.row(u) - support.row(v)).squaredNorm();
      if (w == 0.0)
        throw InvalidInput("mst: centers " + std::to_string(u) + " and " + std::to_string(v) +
                           " coincide");
      edges.push_back({u, v, w});
    }
  std::sort(edges.begin(), edges.end(), [](const MstEdge& a, const MstEdge& b) {
    return std::tie(a.weight, a.u, a.v) < std::tie(b.weight, b.u, b.v);
  });

  std::vector<Eigen::Index> parent(static_cast<std::size_t>(k));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  const auto find = [&](Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };

  Mst out;
  out.nodes = k;
  for (const auto& e : edges) {
    const auto ru = find(e.u), rv = find(e.v);
    if (ru == rv) continue;
    parent[static_cast<std::size_t>(ru)] = rv;
    out.edges.push_back(e);
    out.total_weight += e.weight;
    if (static_cast<Eigen::Index>(out.edges.size()) == k - 1) break;
  }
  return out;
}

/// Per-sample node masses for drawing the MST of sample `i`.
inline Weights mst_node_sizes(const QuantizedEnsemble& ensemble, Eigen::Index i) {
  if (i < 0 || i >= ensemble.size()) throw InvalidInput("mst_node_sizes: index out of range");
  return ensemble.weights.row(i).transpose();
}

}  // namespace lotcyto
