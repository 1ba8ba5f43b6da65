#pragma once

// Primal network simplex for the uncapacitated transportation problem
//
//   min sum_ij C_ij P_ij   s.t.  P 1 = a,  P^T 1 = b,  P >= 0.
//
// Every source and sink is attached to an artificial root by a Big-M arc, which
// gives a strongly feasible starting tree. Entering arcs are chosen by block
// search; the leaving arc follows the strongly feasible rule (last blocking arc
// on the cycle), which rules out cycling under degeneracy. The spanning tree is
// rebuilt from its adjacency after each pivot: O(n + m) per pivot is negligible
// next to pricing for the support sizes this library solves (K <= 256).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lotcyto {

/// Raised when the simplex exceeds its pivot budget.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_objective)
      : std::runtime_error(what), best_objective_(best_objective) {}
  double best_objective() const noexcept { return best_objective_; }

 private:
  double best_objective_;
};

namespace detail {

struct TransportSolution {
  Eigen::MatrixXd plan;
  double cost = 0.0;
  Eigen::VectorXd source_potential;  // f, with f_i + g_j <= C_ij
  Eigen::VectorXd target_potential;  // g
  std::size_t pivots = 0;
};

class NetworkSimplex {
 public:
  NetworkSimplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                 const Eigen::VectorXd& demand)
      : n_(static_cast<int>(cost.rows())), m_(static_cast<int>(cost.cols())) {
    if (supply.size() != n_ || demand.size() != m_)
      throw std::invalid_argument("network simplex: marginal sizes do not match cost matrix");
    const int real_arcs = n_ * m_;
    const int arcs = real_arcs + n_ + m_;
    const int nodes = n_ + m_ + 1;
    root_ = n_ + m_;

    src_.resize(arcs);
    dst_.resize(arcs);
    cost_.resize(arcs);
    flow_.assign(arcs, 0.0);

    double max_cost = 0.0;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < m_; ++j) {
        const int e = i * m_ + j;
        src_[e] = i;
        dst_[e] = n_ + j;
        cost_[e] = cost(i, j);
        max_cost = std::max(max_cost, std::abs(cost(i, j)));
      }
    }
    const double art_cost = (max_cost + 1.0) * static_cast<double>(nodes);
    eps_ = 1e-12 * (max_cost + 1.0);

    tree_adj_.assign(nodes, {});
    for (int i = 0; i < n_; ++i) {
      const int e = real_arcs + i;
      src_[e] = i;
      dst_[e] = root_;
      cost_[e] = art_cost;
      flow_[e] = supply[i];
      link(e);
    }
    for (int j = 0; j < m_; ++j) {
      const int e = real_arcs + n_ + j;
      src_[e] = root_;
      dst_[e] = n_ + j;
      cost_[e] = art_cost;
      flow_[e] = demand[j];
      link(e);
    }
    parent_.assign(nodes, -1);
    pred_.assign(nodes, -1);
    up_.assign(nodes, false);
    depth_.assign(nodes, 0);
    pi_.assign(nodes, 0.0);
    in_tree_.assign(arcs, false);
    for (int e = real_arcs; e < arcs; ++e) in_tree_[e] = true;
    block_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(arcs))));
    rebuild();
  }

  TransportSolution solve(std::size_t max_pivots) {
    std::size_t pivots = 0;
    for (;;) {
      const int in_arc = find_entering();
      if (in_arc < 0) break;
      if (pivots == max_pivots)
        throw SolverError("network simplex: pivot budget of " + std::to_string(max_pivots) +
                              " exhausted",
                          objective());
      pivot(in_arc);
      ++pivots;
    }

    TransportSolution out;
    out.plan = Eigen::MatrixXd::Zero(n_, m_);
    double cost = 0.0;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < m_; ++j) {
        const int e = i * m_ + j;
        out.plan(i, j) = flow_[e];
        cost += flow_[e] * cost_[e];
      }
    }
    out.cost = cost;
    out.source_potential.resize(n_);
    out.target_potential.resize(m_);
    for (int i = 0; i < n_; ++i) out.source_potential[i] = -pi_[i];
    for (int j = 0; j < m_; ++j) out.target_potential[j] = pi_[n_ + j];
    out.pivots = pivots;
    return out;
  }

  /// Total mass still routed through the artificial root.
  double artificial_flow() const {
    double s = 0.0;
    for (std::size_t e = static_cast<std::size_t>(n_) * m_; e < flow_.size(); ++e) s += flow_[e];
    return s;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  double reduced_cost(int e) const { return cost_[e] + pi_[src_[e]] - pi_[dst_[e]]; }

  double objective() const {
    double s = 0.0;
    for (std::size_t e = 0; e < flow_.size(); ++e) s += flow_[e] * cost_[e];
    return s;
  }

  void link(int e) {
    tree_adj_[src_[e]].push_back(e);
    tree_adj_[dst_[e]].push_back(e);
  }

  void unlink(int e) {
    for (int node : {src_[e], dst_[e]}) {
      auto& adj = tree_adj_[node];
      adj.erase(std::find(adj.begin(), adj.end(), e));
    }
  }

  // Recomputes parent/pred/depth/potentials from the tree adjacency.
  void rebuild() {
    stack_.clear();
    stack_.push_back(root_);
    parent_[root_] = -1;
    pred_[root_] = -1;
    depth_[root_] = 0;
    pi_[root_] = 0.0;
    while (!stack_.empty()) {
      const int u = stack_.back();
      stack_.pop_back();
      for (int e : tree_adj_[u]) {
        if (e == pred_[u]) continue;
        const int v = src_[e] == u ? dst_[e] : src_[e];
        parent_[v] = u;
        pred_[v] = e;
        depth_[v] = depth_[u] + 1;
        up_[v] = src_[e] == v;
        pi_[v] = up_[v] ? pi_[u] - cost_[e] : pi_[u] + cost_[e];
        stack_.push_back(v);
      }
    }
  }

  int find_entering() {
    const int arcs = static_cast<int>(cost_.size());
    double best = -eps_;
    int best_arc = -1;
    int scanned_in_block = 0;
    for (int count = 0; count < arcs; ++count) {
      const int e = next_arc_;
      next_arc_ = next_arc_ + 1 == arcs ? 0 : next_arc_ + 1;
      if (!in_tree_[e]) {
        const double rc = reduced_cost(e);
        if (rc < best) {
          best = rc;
          best_arc = e;
        }
      }
      if (++scanned_in_block == block_) {
        if (best_arc >= 0) return best_arc;
        scanned_in_block = 0;
      }
    }
    return best_arc;
  }

  void pivot(int in_arc) {
    const int first = src_[in_arc];
    const int second = dst_[in_arc];

    int a = first;
    int b = second;
    while (a != b) {
      if (depth_[a] >= depth_[b])
        a = parent_[a];
      else
        b = parent_[b];
    }
    const int join = a;

    double delta = kInf;
    int u_out = -1;
    for (int u = first; u != join; u = parent_[u]) {
      const double d = up_[u] ? flow_[pred_[u]] : kInf;
      if (d < delta) {
        delta = d;
        u_out = u;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double d = up_[u] ? kInf : flow_[pred_[u]];
      if (d <= delta) {
        delta = d;
        u_out = u;
      }
    }
    if (u_out < 0) throw std::logic_error("network simplex: unbounded cycle");

    if (delta > 0.0) {
      flow_[in_arc] += delta;
      for (int u = first; u != join; u = parent_[u]) {
        double& f = flow_[pred_[u]];
        f = up_[u] ? f - delta : f + delta;
        if (f < 0.0) f = 0.0;
      }
      for (int u = second; u != join; u = parent_[u]) {
        double& f = flow_[pred_[u]];
        f = up_[u] ? f + delta : f - delta;
        if (f < 0.0) f = 0.0;
      }
    }
    const int out_arc = pred_[u_out];
    flow_[out_arc] = 0.0;

    unlink(out_arc);
    in_tree_[out_arc] = false;
    link(in_arc);
    in_tree_[in_arc] = true;
    rebuild();
  }

  int n_;
  int m_;
  int root_ = 0;
  double eps_ = 0.0;
  int block_ = 10;
  int next_arc_ = 0;

  std::vector<int> src_, dst_;
  std::vector<double> cost_, flow_;
  std::vector<bool> in_tree_;
  std::vector<std::vector<int>> tree_adj_;
  std::vector<int> parent_, pred_, depth_;
  std::vector<bool> up_;
  std::vector<double> pi_;
  std::vector<int> stack_;
};

}  // namespace detail
}  // namespace lotcyto
