#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lotcyto/measure.hpp"

namespace lotcyto {

struct KMeansOptions {
  double tolerance = 1e-6;  // max-norm of the center displacement
  int max_iterations = 300;
};

struct KMeansResult {
  Points centers;
  std::vector<Eigen::Index> labels;
  double inertia = 0.0;               // sum_p w_p |x_p - c_{label(p)}|^2
  std::vector<double> inertia_trace;  // one entry per assignment step
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; unlike
/// std::uniform_real_distribution this is identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Index drawn with probability proportional to `mass` (which must have a positive sum).
inline Eigen::Index sample_proportional(std::mt19937_64& rng, const std::vector<double>& mass) {
  double total = 0.0;
  for (double m : mass) total += m;
  const double target = unit_uniform(rng) * total;
  double acc = 0.0;
  Eigen::Index last_positive = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    acc += mass[i];
    last_positive = static_cast<Eigen::Index>(i);
    if (acc > target) return last_positive;
  }
  return last_positive;
}

/// Nearest center of point `p`; ties go to the lowest center index.
inline Eigen::Index nearest_center(const double* p, const Points& centers, double* dist2) {
  const Eigen::Index k = centers.rows();
  const Eigen::Index d = centers.cols();
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < k; ++c) {
    const double* q = centers.data() + c * d;
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double t = p[j] - q[j];
      s += t * t;
    }
    if (s < best_d) {
      best_d = s;
      best = c;
    }
  }
  *dist2 = best_d;
  return best;
}

inline Eigen::Index count_distinct_rows(const Points& x) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
  const auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  Eigen::Index distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (less(order[i - 1], order[i])) ++distinct;
  return distinct;
}

}  // namespace detail

/// Weighted k-means: k-means++ seeding followed by Lloyd iterations.
///
/// Empty clusters are re-seeded at the point farthest from its current center,
/// so exactly k centers are always returned. Deterministic for a fixed seed.
inline KMeansResult weighted_kmeans(const Points& points, const Weights& weights, Eigen::Index k,
                                    std::uint64_t seed, const KMeansOptions& options = {}) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (weights.size() != n) throw InvalidInput("kmeans: weight count does not match point count");
  if (k < 1) throw InvalidInput("kmeans: k must be >= 1");
  if ((weights.array() < 0.0).any() || !(weights.sum() > 0.0))
    throw InvalidInput("kmeans: weights must be nonnegative with positive total");
  const Eigen::Index distinct = detail::count_distinct_rows(points);
  if (k > distinct)
    throw InvalidInput("kmeans: k=" + std::to_string(k) + " exceeds the " +
                       std::to_string(distinct) + " distinct points");

  std::mt19937_64 rng(seed);
  KMeansResult out;
  out.centers.resize(k, d);
  out.labels.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<double> mass(static_cast<std::size_t>(n));

  // k-means++ seeding
  for (Eigen::Index i = 0; i < n; ++i) mass[static_cast<std::size_t>(i)] = weights[i];
  out.centers.row(0) = points.row(detail::sample_proportional(rng, mass));
  for (Eigen::Index c = 1; c < k; ++c) {
    const double* q = out.centers.data() + (c - 1) * d;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* p = points.data() + i * d;
      double s = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) s += (p[j] - q[j]) * (p[j] - q[j]);
      auto& best = dist2[static_cast<std::size_t>(i)];
      best = std::min(best, s);
      mass[static_cast<std::size_t>(i)] = weights[i] * best;
    }
    double total = 0.0;
    for (double m : mass) total += m;
    if (total > 0.0) {
      out.centers.row(c) = points.row(detail::sample_proportional(rng, mass));
    } else {
      // all weighted mass already sits on centers; take the farthest distinct point
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (dist2[static_cast<std::size_t>(i)] > dist2[static_cast<std::size_t>(far)]) far = i;
      out.centers.row(c) = points.row(far);
    }
  }

  std::vector<double> cluster_mass(static_cast<std::size_t>(k));
  Points sums(k, d);

  const auto assign = [&]() {
    double inertia = 0.0;
    std::fill(cluster_mass.begin(), cluster_mass.end(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      double dd;
      const Eigen::Index c = detail::nearest_center(points.data() + i * d, out.centers, &dd);
      out.labels[static_cast<std::size_t>(i)] = c;
      dist2[static_cast<std::size_t>(i)] = dd;
      cluster_mass[static_cast<std::size_t>(c)] += weights[i];
      inertia += weights[i] * dd;
    }
    return inertia;
  };

  // Moves each empty cluster's center onto the point farthest from its center.
  const auto reseed_empty = [&]() {
    bool any = false;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (cluster_mass[static_cast<std::size_t>(c)] > 0.0) continue;
      Eigen::Index far = -1;
      double far_d = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (weights[i] > 0.0 && dist2[static_cast<std::size_t>(i)] > far_d) {
          far_d = dist2[static_cast<std::size_t>(i)];
          far = i;
        }
      }
      if (far < 0) break;
      out.centers.row(c) = points.row(far);
      dist2[static_cast<std::size_t>(far)] = 0.0;
      cluster_mass[static_cast<std::size_t>(c)] = weights[far];
      any = true;
    }
    return any;
  };

  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    out.inertia_trace.push_back(assign());
    if (reseed_empty()) continue;

    sums.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = out.labels[static_cast<std::size_t>(i)];
      sums.row(c) += weights[i] * points.row(i);
    }
    double shift = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      const Eigen::RowVectorXd next = sums.row(c) / cluster_mass[static_cast<std::size_t>(c)];
      shift = std::max(shift, (next - out.centers.row(c)).cwiseAbs().maxCoeff());
      out.centers.row(c) = next;
    }
    if (shift < options.tolerance) {
      out.converged = true;
      ++out.iterations;
      break;
    }
  }

  out.inertia = assign();
  for (int guard = 0; guard < k && reseed_empty(); ++guard) out.inertia = assign();
  out.inertia_trace.push_back(out.inertia);
  return out;
}

}  // namespace lotcyto
