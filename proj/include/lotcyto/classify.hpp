#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lotcyto/measure.hpp"

namespace lotcyto {

struct LogisticOptions {
  double l2 = 1.0;          // penalty (l2/2)|w|^2; the intercept is not penalised
  int max_iterations = 200;
  double tolerance = 1e-10; // max-norm of the Newton step
};

struct LogisticModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  int iterations = 0;
  bool converged = false;

  double probability(const Eigen::RowVectorXd& x) const {
    const double z = intercept + x.dot(coefficients.transpose());
    return 1.0 / (1.0 + std::exp(-z));
  }
};

/// L2-regularised logistic regression fitted by iteratively reweighted least
/// squares (Newton's method on the penalised log-likelihood).
inline LogisticModel fit_logistic(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                  const LogisticOptions& opt = {}) {
  const Eigen::Index n = x.rows(), c = x.cols();
  if (static_cast<Eigen::Index>(y.size()) != n) throw InvalidInput("logistic: label count mismatch");

  Eigen::MatrixXd design(n, c + 1);
  design.col(0).setOnes();
  design.rightCols(c) = x;
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) target[i] = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(c + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(c + 1, opt.l2);
  penalty[0] = 0.0;

  LogisticModel model;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd z = design * beta;
    const Eigen::VectorXd p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).max(1e-12).matrix();
    const Eigen::VectorXd grad = design.transpose() * (p - target) + penalty.cwiseProduct(beta);
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal() += penalty;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    model.iterations = it + 1;
    if (step.cwiseAbs().maxCoeff() < opt.tolerance) {
      model.converged = true;
      break;
    }
  }
  model.intercept = beta[0];
  model.coefficients = beta.tail(c);
  return model;
}

struct ClassificationReport {
  int tp = 0, fn = 0, fp = 0, tn = 0;
  double balanced_accuracy = 0.0;
  std::vector<int> predictions;          // held-out prediction per sample
  std::vector<double> probabilities;     // held-out P(positive) per sample

  int total() const noexcept { return tp + fn + fp + tn; }
};

inline double balanced_accuracy(int tp, int fn, int fp, int tn) {
  return 0.5 * (static_cast<double>(tp) / (tp + fn) + static_cast<double>(tn) / (tn + fp));
}

/// Leave-one-out evaluation of logistic regression on binary labels (1 = positive).
/// Each class needs two members so that every training fold still sees both.
inline ClassificationReport loo_logistic(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                         const LogisticOptions& opt = {}) {
  const Eigen::Index n = features.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw InvalidInput("loo_logistic: " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(n) + " rows");
  if (features.cols() < 1) throw InvalidInput("loo_logistic: no feature columns");
  if (!features.allFinite()) throw InvalidInput("loo_logistic: non-finite feature value");
  int positives = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw InvalidInput("loo_logistic: labels must be 0 or 1");
    positives += l;
  }
  const int negatives = static_cast<int>(n) - positives;
  if (positives == 0 || negatives == 0) throw InvalidInput("loo_logistic: single-class input");
  if (positives < 2 || negatives < 2)
    throw InvalidInput("loo_logistic: each class needs at least two samples");

  ClassificationReport out;
  out.predictions.resize(static_cast<std::size_t>(n));
  out.probabilities.resize(static_cast<std::size_t>(n));
  Eigen::MatrixXd train(n - 1, features.cols());
  std::vector<int> train_labels(static_cast<std::size_t>(n - 1));
  for (Eigen::Index held = 0; held < n; ++held) {
    for (Eigen::Index i = 0, r = 0; i < n; ++i) {
      if (i == held) continue;
      train.row(r) = features.row(i);
      train_labels[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(i)];
      ++r;
    }
    const auto model = fit_logistic(train, train_labels, opt);
    const double p = model.probability(features.row(held));
    const int pred = p > 0.5 ? 1 : 0;
    const auto h = static_cast<std::size_t>(held);
    out.probabilities[h] = p;
    out.predictions[h] = pred;
    if (labels[h] == 1) (pred ? out.tp : out.fn)++;
    else (pred ? out.fp : out.tn)++;
  }
  out.balanced_accuracy = balanced_accuracy(out.tp, out.fn, out.fp, out.tn);
  return out;
}

/// Plot-size scaling for MRD values: ln(y) for y >= 1, y otherwise.
inline double logicle_scale(double y) {
  if (!(y >= 0.0)) throw InvalidInput("logicle_scale: value must be nonnegative");
  return y >= 1.0 ? std::log(y) : y;
}

}  // namespace lotcyto
