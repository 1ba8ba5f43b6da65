#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotcyto/barycenter.hpp"
#include "lotcyto/ot.hpp"
#include "lotcyto/quantize.hpp"

namespace lotcyto {

/// Barycentric projection of a plan: row k is the plan-conditional mean of the
/// target atoms given reference atom k, T(x_k) = (1/a_k) sum_l P_kl y_l.
inline Points barycentric_map(const TransportPlan& plan, const DiscreteMeasure& reference,
                              const DiscreteMeasure& target) {
  if (plan.matrix.rows() != reference.size() || plan.matrix.cols() != target.size())
    throw InvalidInput("barycentric_map: plan is " + std::to_string(plan.matrix.rows()) + "x" +
                       std::to_string(plan.matrix.cols()) + ", measures are " +
                       std::to_string(reference.size()) + " and " +
                       std::to_string(target.size()) + " atoms");
  if (reference.dim() != target.dim())
    throw InvalidInput("barycentric_map: dimension mismatch");
  if ((reference.weights().array() <= 0.0).any())
    throw InvalidInput("barycentric_map: reference weight must be positive");
  Points mapped = plan.matrix * target.support();
  mapped.array().colwise() /= reference.weights().array();
  return mapped;
}

/// Linearized OT embedding: one displacement field v^i = T^i - Id per sample on
/// the reference support. For a pair reference the two fields are stacked.
struct LotEmbedding {
  ReferenceMeasure reference;
  std::vector<Points> displacements;  // N tensors of shape (sum of reference sizes) x d
  std::vector<std::string> sample_ids;
  Weights inner_weights;              // defines the L2(reference) inner product

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(displacements.size()); }
};

/// Displacement field of one target against a single reference measure.
inline Points log_map(const DiscreteMeasure& reference, const DiscreteMeasure& target) {
  const TransportPlan plan = solve_ot(reference, target);
  Points v = barycentric_map(plan, reference, target);
  v -= reference.support();
  return v;
}

inline LotEmbedding embed_ensemble(const QuantizedEnsemble& ensemble,
                                   const ReferenceMeasure& reference) {
  if (reference.measures.empty()) throw InvalidInput("embed_ensemble: empty reference");
  Eigen::Index rows = 0;
  for (const auto& r : reference.measures) {
    if (r.dim() != ensemble.dim())
      throw InvalidInput("embed_ensemble: reference has d=" + std::to_string(r.dim()) +
                         ", ensemble has d=" + std::to_string(ensemble.dim()));
    rows += r.size();
  }

  LotEmbedding out;
  out.reference = reference;
  out.sample_ids = ensemble.sample_ids;
  out.inner_weights.resize(rows);
  {
    Eigen::Index off = 0;
    for (const auto& r : reference.measures) {
      out.inner_weights.segment(off, r.size()) = r.weights();
      off += r.size();
    }
  }
  out.displacements.reserve(static_cast<std::size_t>(ensemble.size()));
  for (Eigen::Index i = 0; i < ensemble.size(); ++i) {
    const DiscreteMeasure target = ensemble.measure(i);
    Points v(rows, ensemble.dim());
    Eigen::Index off = 0;
    for (const auto& r : reference.measures) {
      try {
        v.middleRows(off, r.size()) = log_map(r, target);
      } catch (const SolverError& e) {
        throw SolverError("embedding sample '" + target.id() + "': " + e.what(),
                          e.best_objective());
      }
      off += r.size();
    }
    out.displacements.push_back(std::move(v));
  }
  return out;
}

/// Weighted L2 norm of a displacement field: sqrt(sum_k w_k |v_k|^2).
inline double weighted_norm(const Points& v, const Weights& w) {
  return std::sqrt((v.rowwise().squaredNorm().array() * w.array()).sum());
}

/// Linearized OT distance between samples i and j.
inline double lot_distance(const LotEmbedding& embedding, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || j < 0 || i >= embedding.size() || j >= embedding.size())
    throw InvalidInput("lot_distance: index out of range");
  return weighted_norm(embedding.displacements[static_cast<std::size_t>(i)] -
                           embedding.displacements[static_cast<std::size_t>(j)],
                       embedding.inner_weights);
}

enum class InnerProduct { weighted, plain };

/// Flattens each v^i into a row of length rows*d (row-major over reference
/// atoms). In weighted mode block k is scaled by sqrt(w_k), so Euclidean row
/// distances equal lot_distance.
inline Eigen::MatrixXd as_feature_matrix(const LotEmbedding& embedding,
                                         InnerProduct mode = InnerProduct::weighted) {
  if (embedding.displacements.empty()) return Eigen::MatrixXd(0, 0);
  const Eigen::Index rows = embedding.displacements.front().rows();
  const Eigen::Index d = embedding.displacements.front().cols();
  Eigen::MatrixXd f(embedding.size(), rows * d);
  for (Eigen::Index i = 0; i < embedding.size(); ++i) {
    const Points& v = embedding.displacements[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < rows; ++k) {
      const double s =
          mode == InnerProduct::weighted ? std::sqrt(embedding.inner_weights[k]) : 1.0;
      for (Eigen::Index c = 0; c < d; ++c) f(i, k * d + c) = s * v(k, c);
    }
  }
  return f;
}

}  // namespace lotcyto
