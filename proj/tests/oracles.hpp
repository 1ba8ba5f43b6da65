#pragma once

// Independent brute-force oracles used only by the test suites.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lotcyto/measure.hpp"

namespace oracle {

// Minimum of sum C_ij P_ij over all vertices of the transportation polytope
// {P >= 0, P1 = a, P^T1 = b}.
//
// Every vertex has a forest support, and a forest always has a leaf line: a row
// (or column) with a single basic cell, whose value is then that line's whole
// remaining mass. Peeling leaves one at a time therefore reaches every vertex.
// Lines are numbered rows first, then columns; a vertex is generated once by
// always peeling its lowest-numbered leaf. Choosing to peel line L asserts that
// every active line below L is not a leaf, i.e. still serves as a partner before
// its own peel; that obligation is tracked as a flag bit.
//
// With `prune`, branches whose partial cost plus an admissible lower bound
// (every remaining unit pays at least its cheapest active partner) cannot beat
// the incumbent are cut. The minimum found is the same either way.
class VertexEnumeration {
 public:
  static constexpr int kMaxLines = 16;

  VertexEnumeration(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b, bool prune)
      : n_(static_cast<int>(a.size())), m_(static_cast<int>(b.size())), prune_(prune) {
    if (n_ + m_ > kMaxLines) throw std::invalid_argument("vertex enumeration: too many atoms");
    for (int i = 0; i < n_; ++i) {
      rem0_[i] = a[i];
      for (int j = 0; j < m_; ++j) cost_[i][j] = cost(i, j);
    }
    for (int j = 0; j < m_; ++j) rem0_[n_ + j] = b[j];
  }

  double solve() {
    best_ = std::numeric_limits<double>::infinity();
    recurse((1u << (n_ + m_)) - 1, 0u, rem0_, 0.0);
    return best_;
  }

  std::size_t visited() const { return visited_; }

 private:
  using Amounts = std::array<double, kMaxLines>;

  bool active(std::uint32_t set, int line) const { return (set >> line) & 1u; }

  double lower_bound(std::uint32_t set, const Amounts& rem) const {
    double by_rows = 0.0, by_cols = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (!active(set, i)) continue;
      double cheapest = std::numeric_limits<double>::infinity();
      for (int j = 0; j < m_; ++j)
        if (active(set, n_ + j)) cheapest = std::min(cheapest, cost_[i][j]);
      by_rows += rem[i] * cheapest;
    }
    for (int j = 0; j < m_; ++j) {
      if (!active(set, n_ + j)) continue;
      double cheapest = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n_; ++i)
        if (active(set, i)) cheapest = std::min(cheapest, cost_[i][j]);
      by_cols += rem[n_ + j] * cheapest;
    }
    return std::max(by_rows, by_cols);
  }

  void recurse(std::uint32_t set, std::uint32_t flags, const Amounts& rem, double acc) {
    ++visited_;
    const std::uint32_t rows = set & ((1u << n_) - 1);
    const std::uint32_t cols = set >> n_;
    if (rows == 0 || cols == 0) {
      double left = 0.0;
      for (int l = 0; l < n_ + m_; ++l)
        if (active(set, l)) left += rem[l];
      if (left <= 1e-9 && (flags & set) == 0) best_ = std::min(best_, acc);
      return;
    }
    if (prune_ && acc + lower_bound(set, rem) >= best_) return;
    for (int line = 0; line < n_ + m_; ++line) {
      if (!active(set, line) || active(flags, line)) continue;
      const std::uint32_t below = set & ((1u << line) - 1);
      const bool is_row = line < n_;
      const int lo = is_row ? n_ : 0;
      const int hi = is_row ? n_ + m_ : n_;
      for (int partner = lo; partner < hi; ++partner) {
        if (!active(set, partner) || rem[line] > rem[partner] + 1e-12) continue;
        Amounts next = rem;
        next[partner] = std::max(0.0, rem[partner] - rem[line]);
        const std::uint32_t next_flags = (flags | below) & ~(1u << partner) & ~(1u << line);
        const double c = is_row ? cost_[line][partner - n_] : cost_[partner][line - n_];
        recurse(set & ~(1u << line), next_flags, next, acc + rem[line] * c);
      }
    }
  }

  int n_, m_;
  bool prune_;
  std::array<std::array<double, kMaxLines>, kMaxLines> cost_{};
  Amounts rem0_{};
  double best_ = 0.0;
  std::size_t visited_ = 0;
};

inline double ot_vertex_enumeration(const lotcyto::DiscreteMeasure& a,
                                    const lotcyto::DiscreteMeasure& b, bool prune = true) {
  VertexEnumeration e(lotcyto::squared_distances(a.support(), b.support()), a.weights(),
                      b.weights(), prune);
  return e.solve();
}

inline lotcyto::DiscreteMeasure random_measure(std::mt19937_64& rng, int n, int d,
                                               double scale = 1.0) {
  std::uniform_real_distribution<double> coord(-scale, scale);
  std::uniform_real_distribution<double> mass(0.1, 1.0);
  lotcyto::Points x(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) x(i, k) = coord(rng);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = mass(rng);
  w /= w.sum();
  return lotcyto::DiscreteMeasure(std::move(x), std::move(w));
}

// Total weight of the minimum spanning tree of the complete graph on `centers`
// with squared Euclidean edge weights, by enumerating all (K-1)-edge subsets.
inline double mst_brute_force(const lotcyto::Points& centers) {
  const int k = static_cast<int>(centers.rows());
  if (k <= 1) return 0.0;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) edges.emplace_back(i, j);
  const int e = static_cast<int>(edges.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(k - 1));
  std::function<void(int, int)> choose = [&](int start, int depth) {
    if (depth == k - 1) {
      std::vector<int> comp(static_cast<std::size_t>(k));
      std::iota(comp.begin(), comp.end(), 0);
      std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
      double w = 0.0;
      for (int idx : pick) {
        const auto [u, v] = edges[static_cast<std::size_t>(idx)];
        const int ru = find(u), rv = find(v);
        if (ru == rv) return;
        comp[ru] = rv;
        w += (centers.row(u) - centers.row(v)).squaredNorm();
      }
      best = std::min(best, w);
      return;
    }
    for (int i = start; i < e; ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      choose(i + 1, depth + 1);
    }
  };
  choose(0, 0);
  return best;
}

}  // namespace oracle
