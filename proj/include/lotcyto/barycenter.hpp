#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lotcyto/kmeans.hpp"
#include "lotcyto/ot.hpp"
#include "lotcyto/quantize.hpp"

namespace lotcyto {

enum class ReferenceStrategy { barycenter, uniform_centers, random_sample, pair };

inline std::string_view to_string(ReferenceStrategy s) {
  switch (s) {
    case ReferenceStrategy::barycenter: return "barycenter";
    case ReferenceStrategy::uniform_centers: return "uniform_centers";
    case ReferenceStrategy::random_sample: return "random_sample";
    case ReferenceStrategy::pair: return "pair";
  }
  return "?";
}

inline ReferenceStrategy parse_reference_strategy(std::string_view s) {
  if (s == "barycenter") return ReferenceStrategy::barycenter;
  if (s == "uniform_centers" || s == "uniform") return ReferenceStrategy::uniform_centers;
  if (s == "random_sample" || s == "random") return ReferenceStrategy::random_sample;
  if (s == "pair") return ReferenceStrategy::pair;
  throw InvalidInput("unknown reference strategy '" + std::string(s) + "'");
}

enum class BarycenterWeights {
  fixed_uniform,  // optimise the support only
  free,           // also descend on the weights
};

/// Reference measure for the LOT embedding. Holds two measures for the pair
/// strategy, one otherwise.
struct ReferenceMeasure {
  std::vector<DiscreteMeasure> measures;
  ReferenceStrategy strategy = ReferenceStrategy::barycenter;
  std::uint64_t seed = 0;
  std::vector<Eigen::Index> chosen;     // sample indices for random_sample / pair
  std::vector<double> objective_trace;  // barycenter only: (1/N) sum_i W2^2(ref, nu^i)
  bool stalled = false;

  const DiscreteMeasure& measure() const { return measures.front(); }
};

struct BarycenterOptions {
  int max_iterations = 100;
  double stop_decrease = 1e-8;
  BarycenterWeights weights = BarycenterWeights::fixed_uniform;
};

namespace detail {

struct BarycenterEval {
  double objective = 0.0;
  std::vector<OtSolution> solutions;
};

inline BarycenterEval evaluate_barycenter(const DiscreteMeasure& bary,
                                          const std::vector<DiscreteMeasure>& targets) {
  BarycenterEval e;
  e.solutions.reserve(targets.size());
  for (const auto& t : targets) {
    e.solutions.push_back(solve_ot_dual(bary, t));
    e.objective += e.solutions.back().plan.cost;
  }
  e.objective /= static_cast<double>(targets.size());
  return e;
}

// x_k <- (1/N) sum_i T^i(x_k): the minimiser of the objective for fixed plans.
inline Points barycenter_support_step(const DiscreteMeasure& bary,
                                      const std::vector<DiscreteMeasure>& targets,
                                      const BarycenterEval& eval) {
  Points next = Points::Zero(bary.size(), bary.dim());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Eigen::MatrixXd& p = eval.solutions[i].plan.matrix;
    next += p * targets[i].support();
  }
  next.array().colwise() /= (bary.weights().array() * static_cast<double>(targets.size()));
  return next;
}

}  // namespace detail

/// Free-support Wasserstein barycenter of the quantized measures by alternating
/// minimisation: exact plans to every nu^i, then each support point moves to the
/// average of its barycentric images. Starts from the ensemble centers (or a
/// k-means of their mean measure when k differs) with uniform weights.
inline ReferenceMeasure wasserstein_barycenter(const QuantizedEnsemble& ensemble, Eigen::Index k,
                                               std::uint64_t seed,
                                               const BarycenterOptions& options = {}) {
  if (k < 1) throw InvalidInput("wasserstein_barycenter: k must be >= 1");
  if (ensemble.size() < 1) throw InvalidInput("wasserstein_barycenter: empty ensemble");
  if (options.max_iterations < 0)
    throw InvalidInput("wasserstein_barycenter: max_iterations must be >= 0");

  std::vector<DiscreteMeasure> targets;
  for (Eigen::Index i = 0; i < ensemble.size(); ++i) targets.push_back(ensemble.measure(i));

  Points support;
  if (k == ensemble.k()) {
    support = ensemble.support;
  } else {
    const Weights mean_w = ensemble.weights.colwise().mean().transpose();
    const DiscreteMeasure pooled = DiscreteMeasure::dropping_zeros(ensemble.support, mean_w);
    if (k > pooled.size())
      throw InvalidInput("wasserstein_barycenter: k=" + std::to_string(k) + " exceeds the " +
                         std::to_string(pooled.size()) + " occupied ensemble centers");
    support = weighted_kmeans(pooled.support(), pooled.weights(), k, seed).centers;
  }
  Weights b = Weights::Constant(k, 1.0 / static_cast<double>(k));

  ReferenceMeasure ref;
  ref.strategy = ReferenceStrategy::barycenter;
  ref.seed = seed;

  DiscreteMeasure bary(support, b, "barycenter");
  detail::BarycenterEval eval = detail::evaluate_barycenter(bary, targets);
  ref.objective_trace.push_back(eval.objective);

  for (int it = 0; it < options.max_iterations; ++it) {
    const double before = eval.objective;

    DiscreteMeasure moved(detail::barycenter_support_step(bary, targets, eval), bary.weights(),
                          "barycenter");
    detail::BarycenterEval moved_eval = detail::evaluate_barycenter(moved, targets);
    if (moved_eval.objective > before) {
      ref.stalled = true;
      break;
    }
    bary = std::move(moved);
    eval = std::move(moved_eval);

    if (options.weights == BarycenterWeights::free) {
      // Exponentiated-gradient step on b; the averaged source potentials are a
      // subgradient of the objective in b. Backtrack until it decreases.
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(bary.size());
      for (const auto& s : eval.solutions) grad += s.source_potential;
      grad /= static_cast<double>(targets.size());
      grad.array() -= bary.weights().dot(grad);
      const double scale = grad.cwiseAbs().maxCoeff();
      if (scale > 0.0) {
        double step = 1.0 / scale;
        for (int tries = 0; tries < 12; ++tries, step *= 0.5) {
          Weights nb = (bary.weights().array() * (-step * grad.array()).exp()).matrix();
          nb /= nb.sum();
          if ((nb.array() <= 0.0).any()) continue;
          DiscreteMeasure reweighted(bary.support(), nb, "barycenter");
          auto re_eval = detail::evaluate_barycenter(reweighted, targets);
          if (re_eval.objective < eval.objective) {
            bary = std::move(reweighted);
            eval = std::move(re_eval);
            break;
          }
        }
      }
    }

    ref.objective_trace.push_back(eval.objective);
    if (before - eval.objective < options.stop_decrease) break;
  }

  ref.measures.push_back(std::move(bary));
  return ref;
}

struct ReferenceOptions {
  Eigen::Index barycenter_k = 0;  // 0: ensemble K
  BarycenterOptions barycenter;
};

/// Reference measure under one of the four strategies compared for LOT.
inline ReferenceMeasure make_reference(const QuantizedEnsemble& ensemble,
                                       ReferenceStrategy strategy, std::uint64_t seed,
                                       const ReferenceOptions& options = {}) {
  switch (strategy) {
    case ReferenceStrategy::barycenter:
      return wasserstein_barycenter(
          ensemble, options.barycenter_k > 0 ? options.barycenter_k : ensemble.k(), seed,
          options.barycenter);
    case ReferenceStrategy::uniform_centers: {
      ReferenceMeasure ref;
      ref.strategy = strategy;
      ref.seed = seed;
      ref.measures.push_back(DiscreteMeasure::uniform(ensemble.support, "uniform_centers"));
      return ref;
    }
    case ReferenceStrategy::random_sample:
    case ReferenceStrategy::pair: {
      const Eigen::Index n = ensemble.size();
      const Eigen::Index picks = strategy == ReferenceStrategy::pair ? 2 : 1;
      if (n < picks)
        throw InvalidInput("make_reference: strategy '" + std::string(to_string(strategy)) +
                           "' needs at least " + std::to_string(picks) + " samples");
      std::mt19937_64 rng(seed);
      ReferenceMeasure ref;
      ref.strategy = strategy;
      ref.seed = seed;
      while (static_cast<Eigen::Index>(ref.chosen.size()) < picks) {
        const auto i = std::min<Eigen::Index>(
            n - 1, static_cast<Eigen::Index>(detail::unit_uniform(rng) * static_cast<double>(n)));
        if (std::find(ref.chosen.begin(), ref.chosen.end(), i) != ref.chosen.end()) continue;
        ref.chosen.push_back(i);
        ref.measures.push_back(ensemble.measure(i));
      }
      return ref;
    }
  }
  throw InvalidInput("make_reference: unknown strategy");
}

}  // namespace lotcyto
