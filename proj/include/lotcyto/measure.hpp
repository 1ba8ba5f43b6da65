#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace lotcyto {

/// Row-major point matrix, one atom (cell) per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Weights = Eigen::VectorXd;

/// Thrown when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// A discrete probability measure sum_j w_j delta_{x_j} in R^d.
///
/// Immutable after construction. Zero-weight atoms are rejected; callers that
/// hold sparse weight vectors should go through `DiscreteMeasure::dropping_zeros`.
class DiscreteMeasure {
 public:
  DiscreteMeasure(Points support, Weights weights, std::string id = {})
      : support_(std::move(support)), weights_(std::move(weights)), id_(std::move(id)) {
    validate();
  }

  /// Uniform weights 1/n on the rows of `support`.
  static DiscreteMeasure uniform(Points support, std::string id = {}) {
    const auto n = support.rows();
    if (n < 1) throw InvalidInput("measure '" + id + "': needs at least one atom");
    Weights w = Weights::Constant(n, 1.0 / static_cast<double>(n));
    return DiscreteMeasure(std::move(support), std::move(w), std::move(id));
  }

  /// Builds a measure from a possibly sparse weight vector, keeping only atoms
  /// with weight > `threshold`. The kept weights are not renormalised.
  static DiscreteMeasure dropping_zeros(const Points& support, const Weights& weights,
                                        std::string id = {}, double threshold = 0.0) {
    if (support.rows() != weights.size())
      throw InvalidInput("measure '" + id + "': support/weight size mismatch");
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      if (weights[i] > threshold) ++kept;
    Points s(kept, support.cols());
    Weights w(kept);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (weights[i] > threshold) {
        s.row(r) = support.row(i);
        w[r] = weights[i];
        ++r;
      }
    }
    return DiscreteMeasure(std::move(s), std::move(w), std::move(id));
  }

  const Points& support() const noexcept { return support_; }
  const Weights& weights() const noexcept { return weights_; }
  const std::string& id() const noexcept { return id_; }
  Eigen::Index size() const noexcept { return support_.rows(); }
  Eigen::Index dim() const noexcept { return support_.cols(); }

  Eigen::RowVectorXd mean() const { return weights_.transpose() * support_; }

 private:
  void validate() const {
    const std::string who = "measure '" + id_ + "': ";
    if (support_.rows() < 1) throw InvalidInput(who + "needs at least one atom");
    if (support_.cols() < 1) throw InvalidInput(who + "dimension must be >= 1");
    if (weights_.size() != support_.rows())
      throw InvalidInput(who + "support has " + std::to_string(support_.rows()) +
                         " atoms but " + std::to_string(weights_.size()) + " weights");
    if (!support_.allFinite()) throw InvalidInput(who + "non-finite coordinate");
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!std::isfinite(weights_[i]) || weights_[i] <= 0.0)
        throw InvalidInput(who + "weight " + std::to_string(i) +
                           " is not strictly positive; drop zero-mass atoms first");
    }
    if (std::abs(weights_.sum() - 1.0) > kSimplexTolerance)
      throw InvalidInput(who + "weights sum to " + std::to_string(weights_.sum()) +
                         ", expected 1");
  }

  Points support_;
  Weights weights_;
  std::string id_;
};

/// Pairwise squared Euclidean distances between the rows of `a` and `b`.
inline Eigen::MatrixXd squared_distances(const Points& a, const Points& b) {
  Eigen::MatrixXd c(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) c(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return c;
}

/// A coupling between two discrete measures together with its quadratic cost.
struct TransportPlan {
  Eigen::MatrixXd matrix;  // rows: source atoms, cols: target atoms
  double cost = 0.0;       // sum_ij P_ij |x_i - y_j|^2
  std::string source_id;
  std::string target_id;
};

}  // namespace lotcyto
