#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lotcyto/measure.hpp"

namespace lotcyto {

struct SilhouetteResult {
  double score = 0.0;                // mean of the per-point scores
  std::vector<double> per_point;
};

/// Maps arbitrary string labels to dense integer codes in order of first appearance.
inline std::vector<int> encode_labels(const std::vector<std::string>& labels) {
  std::map<std::string, int> codes;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    auto [it, inserted] = codes.try_emplace(l, static_cast<int>(codes.size()));
    out.push_back(it->second);
  }
  return out;
}

/// Silhouette from a symmetric distance matrix.
///
/// s(x) = (b - a) / max(a, b), where a is the mean distance from x to the other
/// members of its cluster and b the smallest mean distance to another cluster.
/// Points in singleton clusters score 0.
inline SilhouetteResult silhouette_from_distances(const Eigen::MatrixXd& dist,
                                                  const std::vector<int>& labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (dist.rows() != n || dist.cols() != n)
    throw InvalidInput("silhouette: distance matrix does not match label count");
  std::map<int, Eigen::Index> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw InvalidInput("silhouette: needs at least two clusters");

  std::vector<int> cluster_of(labels.size());
  std::map<int, int> slot;
  for (const auto& [l, count] : sizes) slot.emplace(l, static_cast<int>(slot.size()));
  std::vector<double> size_of(sizes.size());
  for (const auto& [l, count] : sizes) size_of[static_cast<std::size_t>(slot[l])] = static_cast<double>(count);
  for (std::size_t i = 0; i < labels.size(); ++i) cluster_of[i] = slot[labels[i]];

  SilhouetteResult out;
  out.per_point.resize(labels.size());
  std::vector<double> sums(sizes.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sums[static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(j)])] += dist(i, j);
    const auto own = static_cast<std::size_t>(cluster_of[static_cast<std::size_t>(i)]);
    double s = 0.0;
    if (size_of[own] > 1.0) {
      const double a = sums[own] / (size_of[own] - 1.0);
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < sums.size(); ++c)
        if (c != own) b = std::min(b, sums[c] / size_of[c]);
      const double denom = std::max(a, b);
      s = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    out.per_point[static_cast<std::size_t>(i)] = s;
    out.score += s;
  }
  out.score /= static_cast<double>(n);
  return out;
}

inline Eigen::MatrixXd pairwise_euclidean(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
  }
  return d;
}

/// Silhouette with Euclidean distances between the rows of `features`.
inline SilhouetteResult silhouette(const Eigen::MatrixXd& features, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw InvalidInput("silhouette: " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(features.rows()) + " rows");
  return silhouette_from_distances(pairwise_euclidean(features), labels);
}

}  // namespace lotcyto
