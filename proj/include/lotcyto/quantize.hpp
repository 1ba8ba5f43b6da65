#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lotcyto/kmeans.hpp"
#include "lotcyto/measure.hpp"
#include "lotcyto/ot.hpp"

namespace lotcyto {

/// K shared support points and one weight vector per sample: nu^i = sum_k a^i_k delta_{x_k}.
struct QuantizedEnsemble {
  Points support;           // K x d
  Eigen::MatrixXd weights;  // N x K, row i on the simplex
  std::vector<std::string> sample_ids;
  double kmeans_inertia = 0.0;  // inertia of the mean measure about `support`
  std::vector<double> inertia_trace;

  Eigen::Index k() const noexcept { return support.rows(); }
  Eigen::Index size() const noexcept { return weights.rows(); }
  Eigen::Index dim() const noexcept { return support.cols(); }

  /// nu^i with its empty Voronoi cells removed.
  DiscreteMeasure measure(Eigen::Index i) const {
    return DiscreteMeasure::dropping_zeros(support, weights.row(i).transpose(),
                                           sample_ids[static_cast<std::size_t>(i)]);
  }
};

/// Voronoi masses of `measure` on `support`: component k is the total weight of
/// the atoms whose nearest center is x_k (ties to the lowest index).
inline Weights assign_weights(const DiscreteMeasure& measure, const Points& support) {
  if (measure.dim() != support.cols())
    throw InvalidInput("assign_weights: measure '" + measure.id() + "' has d=" +
                       std::to_string(measure.dim()) + ", support has d=" +
                       std::to_string(support.cols()));
  if (support.rows() < 1) throw InvalidInput("assign_weights: empty support");
  Weights a = Weights::Zero(support.rows());
  const Points& x = measure.support();
  for (Eigen::Index j = 0; j < measure.size(); ++j) {
    double dd;
    a[detail::nearest_center(x.data() + j * x.cols(), support, &dd)] += measure.weights()[j];
  }
  return a;
}

/// Mean-measure quantization: k-means on the pooled cloud of all samples, each
/// sample weighted 1/N, then per-sample Voronoi weights on the shared centers.
inline QuantizedEnsemble quantize_ensemble(std::span<const DiscreteMeasure> measures,
                                           Eigen::Index k, std::uint64_t seed,
                                           const KMeansOptions& options = {}) {
  if (measures.empty()) throw InvalidInput("quantize_ensemble: no measures");
  const Eigen::Index d = measures.front().dim();
  Eigen::Index total = 0;
  for (const auto& m : measures) {
    if (m.dim() != d)
      throw InvalidInput("quantize_ensemble: measure '" + m.id() + "' has d=" +
                         std::to_string(m.dim()) + ", expected " + std::to_string(d));
    total += m.size();
  }
  if (k < 1 || k > total)
    throw InvalidInput("quantize_ensemble: k=" + std::to_string(k) + " outside [1, " +
                       std::to_string(total) + "]");

  const double share = 1.0 / static_cast<double>(measures.size());
  Points pooled(total, d);
  Weights pooled_w(total);
  Eigen::Index row = 0;
  for (const auto& m : measures) {
    pooled.middleRows(row, m.size()) = m.support();
    pooled_w.segment(row, m.size()) = share * m.weights();
    row += m.size();
  }

  KMeansResult km = weighted_kmeans(pooled, pooled_w, k, seed, options);

  QuantizedEnsemble out;
  out.support = std::move(km.centers);
  out.weights.resize(static_cast<Eigen::Index>(measures.size()), k);
  for (std::size_t i = 0; i < measures.size(); ++i) {
    out.weights.row(static_cast<Eigen::Index>(i)) =
        assign_weights(measures[i], out.support).transpose();
    out.sample_ids.push_back(measures[i].id());
  }
  out.kmeans_inertia = km.inertia;
  out.inertia_trace = std::move(km.inertia_trace);
  return out;
}

struct Proposition1Report {
  double lhs = 0.0;  // (1/N) sum_i W2^2(nu^i, mu^i)
  double rhs = 0.0;  // k-means inertia of the mean measure
  double gap = 0.0;
};

/// Checks that the average squared W2 between each sample and its quantization
/// equals the k-means inertia of the mean measure. A large gap means a bug; it is
/// reported, not thrown.
inline Proposition1Report verify_proposition1(std::span<const DiscreteMeasure> measures,
                                              const QuantizedEnsemble& ensemble) {
  if (static_cast<Eigen::Index>(measures.size()) != ensemble.size())
    throw InvalidInput("verify_proposition1: ensemble was built from a different sample set");
  Proposition1Report r;
  for (std::size_t i = 0; i < measures.size(); ++i)
    r.lhs += solve_ot(ensemble.measure(static_cast<Eigen::Index>(i)), measures[i]).cost;
  r.lhs /= static_cast<double>(measures.size());
  r.rhs = ensemble.kmeans_inertia;
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

}  // namespace lotcyto
