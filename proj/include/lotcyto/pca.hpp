#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "lotcyto/measure.hpp"

namespace lotcyto {

struct PcaResult {
  Eigen::RowVectorXd mean;                  // length p
  Eigen::MatrixXd components;               // c x p, orthonormal rows
  Eigen::VectorXd explained_variance_ratio; // length c, non-increasing
  Eigen::VectorXd singular_values;          // all min(N, p) values, descending
  Eigen::MatrixXd coordinates;              // N x c scores

  Eigen::Index n_components() const noexcept { return components.rows(); }
};

/// PCA through the SVD of the mean-centered data. Each component is signed so
/// that its largest-magnitude entry is positive (first such entry on ties).
inline PcaResult pca(const Eigen::MatrixXd& features, Eigen::Index c) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (c < 1 || c > std::min(n, p))
    throw InvalidInput("pca: component count " + std::to_string(c) + " outside [1, " +
                       std::to_string(std::min(n, p)) + "]");
  if (!features.allFinite()) throw InvalidInput("pca: non-finite feature value");

  PcaResult out;
  out.mean = features.colwise().mean();
  const Eigen::MatrixXd centered = features.rowwise() - out.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  Eigen::MatrixXd v = svd.matrixV().leftCols(c);
  for (Eigen::Index j = 0; j < c; ++j) {
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < p; ++r)
      if (std::abs(v(r, j)) > std::abs(v(arg, j))) arg = r;
    if (v(arg, j) < 0.0) v.col(j) *= -1.0;
  }
  out.components = v.transpose();
  const double total = out.singular_values.squaredNorm();
  out.explained_variance_ratio =
      total > 0.0 ? Eigen::VectorXd(out.singular_values.head(c).array().square() / total)
                  : Eigen::VectorXd::Zero(c);
  out.coordinates = centered * v;
  return out;
}

/// Back-projection of the scores onto the original feature space.
inline Eigen::MatrixXd reconstruct(const PcaResult& r) {
  return (r.coordinates * r.components).rowwise() + r.mean;
}

}  // namespace lotcyto
