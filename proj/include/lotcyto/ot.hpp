#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "lotcyto/measure.hpp"
#include "lotcyto/network_simplex.hpp"

namespace lotcyto {

struct OtOptions {
  /// Zero selects a budget proportional to the number of arcs.
  std::size_t max_pivots = 0;
};

/// Optimal plan plus the dual potentials (f, g) certifying it.
struct OtSolution {
  TransportPlan plan;
  Eigen::VectorXd source_potential;
  Eigen::VectorXd target_potential;
};

namespace detail {

inline void check_same_dim(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim())
    throw InvalidInput("dimension mismatch: '" + a.id() + "' has d=" + std::to_string(a.dim()) +
                       ", '" + b.id() + "' has d=" + std::to_string(b.dim()));
}

inline double plan_cost(const Eigen::MatrixXd& plan, const Eigen::MatrixXd& cost) {
  return plan.cwiseProduct(cost).sum();
}

}  // namespace detail

/// Exact Kantorovich problem with squared Euclidean cost, including duals.
inline OtSolution solve_ot_dual(const DiscreteMeasure& source, const DiscreteMeasure& target,
                                const OtOptions& options = {}) {
  detail::check_same_dim(source, target);
  const Eigen::MatrixXd cost = squared_distances(source.support(), target.support());
  detail::NetworkSimplex simplex(cost, source.weights(), target.weights());
  std::size_t budget = options.max_pivots;
  if (budget == 0) {
    const auto arcs = static_cast<std::size_t>(cost.size() + cost.rows() + cost.cols());
    budget = 100 * arcs + 1000;
  }
  detail::TransportSolution sol = simplex.solve(budget);

  OtSolution out;
  out.plan.matrix = std::move(sol.plan);
  out.plan.cost = std::max(0.0, detail::plan_cost(out.plan.matrix, cost));
  out.plan.source_id = source.id();
  out.plan.target_id = target.id();
  out.source_potential = std::move(sol.source_potential);
  out.target_potential = std::move(sol.target_potential);
  return out;
}

/// Optimal transport plan between two measures for the cost |x - y|^2.
inline TransportPlan solve_ot(const DiscreteMeasure& source, const DiscreteMeasure& target,
                              const OtOptions& options = {}) {
  return solve_ot_dual(source, target, options).plan;
}

/// 2-Wasserstein distance.
inline double wasserstein2(const DiscreteMeasure& source, const DiscreteMeasure& target,
                           const OtOptions& options = {}) {
  return std::sqrt(solve_ot(source, target, options).cost);
}

/// Deterministic coupling induced by a Monge map sending source atom i to
/// target atom `assignment[i]`. The map must push the source weights forward
/// onto the target weights.
inline TransportPlan map_induced_plan(const DiscreteMeasure& source,
                                      std::span<const Eigen::Index> assignment,
                                      const DiscreteMeasure& target) {
  detail::check_same_dim(source, target);
  if (static_cast<Eigen::Index>(assignment.size()) != source.size())
    throw InvalidInput("map_induced_plan: assignment has " + std::to_string(assignment.size()) +
                       " entries for " + std::to_string(source.size()) + " source atoms");
  Eigen::MatrixXd plan = Eigen::MatrixXd::Zero(source.size(), target.size());
  for (Eigen::Index i = 0; i < source.size(); ++i) {
    const Eigen::Index j = assignment[static_cast<std::size_t>(i)];
    if (j < 0 || j >= target.size())
      throw InvalidInput("map_induced_plan: source atom " + std::to_string(i) +
                         " mapped to invalid target index " + std::to_string(j));
    plan(i, j) += source.weights()[i];
  }
  const Eigen::VectorXd pushed = plan.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    if (std::abs(pushed[j] - target.weights()[j]) > kSimplexTolerance)
      throw InvalidInput("map_induced_plan: push-forward mass " + std::to_string(pushed[j]) +
                         " at target atom " + std::to_string(j) + " differs from its weight " +
                         std::to_string(target.weights()[j]));
  }
  TransportPlan out;
  out.cost = detail::plan_cost(plan, squared_distances(source.support(), target.support()));
  out.matrix = std::move(plan);
  out.source_id = source.id();
  out.target_id = target.id();
  return out;
}

}  // namespace lotcyto
