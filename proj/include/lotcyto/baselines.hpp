#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lotcyto/measure.hpp"
#include "lotcyto/quantize.hpp"

namespace lotcyto {

// ---------------------------------------------------------------------------
// Compositional analysis of the quantized weight vectors

struct CompositionEmbedding {
  Eigen::MatrixXd clr_matrix;  // N x K, rows sum to zero
  double pseudo_count = 1e-6;
  std::vector<std::string> sample_ids;
};

/// Centered log-ratio of one composition after additive smoothing.
inline Eigen::RowVectorXd clr(const Eigen::RowVectorXd& composition, double pseudo_count) {
  if (!(pseudo_count > 0.0)) throw InvalidInput("clr: pseudo_count must be positive");
  Eigen::RowVectorXd logs = (composition.array() + pseudo_count).log().matrix();
  logs.array() -= logs.mean();
  return logs;
}

inline CompositionEmbedding clr_transform(const QuantizedEnsemble& ensemble,
                                          double pseudo_count = 1e-6) {
  CompositionEmbedding out;
  out.pseudo_count = pseudo_count;
  out.sample_ids = ensemble.sample_ids;
  out.clr_matrix.resize(ensemble.size(), ensemble.k());
  for (Eigen::Index i = 0; i < ensemble.size(); ++i)
    out.clr_matrix.row(i) = clr(ensemble.weights.row(i), pseudo_count);
  return out;
}

// ---------------------------------------------------------------------------
// Kernel mean embedding with random Fourier features for the Gaussian kernel
// exp(-|x - y|^2 / (2 sigma^2)).

struct KmeEmbedding {
  Eigen::MatrixXd frequencies;  // (s/2) x d, rows drawn from N(0, sigma^-2 I)
  double sigma = 5.0;
  Eigen::MatrixXd features;     // N x s
  std::uint64_t seed = 0;
  std::vector<std::string> sample_ids;

  Eigen::Index s() const noexcept { return 2 * frequencies.rows(); }
};

namespace detail {

inline void check_rff_params(Eigen::Index s, double sigma) {
  if (s < 2 || s % 2 != 0)
    throw InvalidInput("kme: feature count s=" + std::to_string(s) + " must be even and >= 2");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidInput("kme: sigma must be positive and finite");
}

// Box-Muller on the portable unit uniform, so frequency draws do not depend on
// the standard library's normal_distribution.
inline double standard_normal(std::mt19937_64& rng) {
  double u1;
  do {
    u1 = unit_uniform(rng);
  } while (u1 <= 0.0);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace detail

inline Eigen::MatrixXd draw_rff_frequencies(Eigen::Index s, Eigen::Index d, double sigma,
                                            std::uint64_t seed) {
  detail::check_rff_params(s, sigma);
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd w(s / 2, d);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < d; ++j) w(i, j) = detail::standard_normal(rng) / sigma;
  return w;
}

/// Random Fourier feature map of the rows of `x`:
/// sqrt(2/s) (sin(w_1.x), ..., sin(w_{s/2}.x), cos(w_1.x), ..., cos(w_{s/2}.x)).
inline Eigen::MatrixXd rff_features(const Points& x, const Eigen::MatrixXd& frequencies) {
  const Eigen::Index half = frequencies.rows();
  const double scale = std::sqrt(1.0 / static_cast<double>(half));  // sqrt(2/s)
  const Eigen::MatrixXd proj = x * frequencies.transpose();
  Eigen::MatrixXd phi(x.rows(), 2 * half);
  phi.leftCols(half) = scale * proj.array().sin().matrix();
  phi.rightCols(half) = scale * proj.array().cos().matrix();
  return phi;
}

inline KmeEmbedding kme_embed(std::span<const DiscreteMeasure> measures, Eigen::Index s,
                              double sigma, std::uint64_t seed) {
  detail::check_rff_params(s, sigma);
  if (measures.empty()) throw InvalidInput("kme: no measures");
  const Eigen::Index d = measures.front().dim();
  KmeEmbedding out;
  out.sigma = sigma;
  out.seed = seed;
  out.frequencies = draw_rff_frequencies(s, d, sigma, seed);
  out.features.resize(static_cast<Eigen::Index>(measures.size()), s);
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto& m = measures[i];
    if (m.dim() != d) throw InvalidInput("kme: measure '" + m.id() + "' has mismatched dimension");
    out.features.row(static_cast<Eigen::Index>(i)) =
        m.weights().transpose() * rff_features(m.support(), out.frequencies);
    out.sample_ids.push_back(m.id());
  }
  return out;
}

/// Maximum mean discrepancy estimate: distance between two embedded samples.
inline double mmd(const KmeEmbedding& embedding, Eigen::Index i, Eigen::Index j) {
  const Eigen::Index n = embedding.features.rows();
  if (i < 0 || j < 0 || i >= n || j >= n) throw InvalidInput("mmd: index out of range");
  return (embedding.features.row(i) - embedding.features.row(j)).norm();
}

}  // namespace lotcyto
