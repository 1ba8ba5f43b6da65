#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <vector>

#include "lotcyto/ot.hpp"
#include "oracles.hpp"

using lotcyto::DiscreteMeasure;
using lotcyto::Points;

namespace {

DiscreteMeasure dirac(std::initializer_list<double> x) {
  Points p(1, static_cast<Eigen::Index>(x.size()));
  Eigen::Index k = 0;
  for (double v : x) p(0, k++) = v;
  return DiscreteMeasure::uniform(p);
}

DiscreteMeasure uniform_1d(std::initializer_list<double> xs) {
  Points p(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index k = 0;
  for (double v : xs) p(k++, 0) = v;
  return DiscreteMeasure::uniform(p);
}

void expect_marginals(const lotcyto::TransportPlan& plan, const DiscreteMeasure& a,
                      const DiscreteMeasure& b) {
  EXPECT_LE((plan.matrix.rowwise().sum() - a.weights()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((plan.matrix.colwise().sum().transpose() - b.weights()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GE(plan.matrix.minCoeff(), 0.0);
  const double recomputed =
      plan.matrix.cwiseProduct(lotcyto::squared_distances(a.support(), b.support())).sum();
  EXPECT_NEAR(plan.cost, recomputed, 1e-8);
}

}  // namespace

TEST(DiscreteMeasure, RejectsInvalidInput) {
  Points p(2, 1);
  p << 0, 1;
  EXPECT_THROW(DiscreteMeasure(p, Eigen::Vector2d(0.5, 0.4)), lotcyto::InvalidInput);
  EXPECT_THROW(DiscreteMeasure(p, Eigen::Vector2d(1.0, 0.0)), lotcyto::InvalidInput);
  EXPECT_THROW(DiscreteMeasure(p, Eigen::Vector3d(0.2, 0.4, 0.4)), lotcyto::InvalidInput);
  Points bad(1, 1);
  bad << std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(DiscreteMeasure::uniform(bad), lotcyto::InvalidInput);
  EXPECT_THROW(DiscreteMeasure::uniform(Points(0, 2)), lotcyto::InvalidInput);
}

TEST(DiscreteMeasure, DroppingZeros) {
  Points p(3, 1);
  p << 0, 1, 2;
  const auto m = DiscreteMeasure::dropping_zeros(p, Eigen::Vector3d(0.25, 0.0, 0.75), "x");
  ASSERT_EQ(m.size(), 2);
  EXPECT_DOUBLE_EQ(m.support()(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(m.weights()[1], 0.75);
}

TEST(SolveOt, SingleAtoms) {
  const auto plan = lotcyto::solve_ot(dirac({0, 0}), dirac({3, 4}));
  ASSERT_EQ(plan.matrix.rows(), 1);
  EXPECT_DOUBLE_EQ(plan.matrix(0, 0), 1.0);
  EXPECT_NEAR(plan.cost, 25.0, 1e-12);
  EXPECT_NEAR(lotcyto::wasserstein2(dirac({0, 0}), dirac({3, 4})), 5.0, 1e-12);
}

TEST(SolveOt, IdentityIsDiagonal) {
  std::mt19937_64 rng(7);
  const auto mu = oracle::random_measure(rng, 5, 3);
  const auto plan = lotcyto::solve_ot(mu, mu);
  EXPECT_NEAR(plan.cost, 0.0, 1e-12);
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(plan.matrix(i, i), mu.weights()[i], 1e-12);
  EXPECT_NEAR(lotcyto::wasserstein2(mu, mu), 0.0, 1e-7);
}

TEST(SolveOt, MonotonePlanIn1d) {
  const auto a = uniform_1d({0, 2});
  const auto b = uniform_1d({1, 3});
  // oracle: both vertex couplings of the 2x2 Birkhoff polytope
  const double monotone = 0.5 * 1 + 0.5 * 1;
  const double crossed = 0.5 * 9 + 0.5 * 1;
  ASSERT_LT(monotone, crossed);
  const auto plan = lotcyto::solve_ot(a, b);
  EXPECT_NEAR(plan.cost, monotone, 1e-12);
  EXPECT_NEAR(plan.matrix(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(plan.matrix(1, 1), 0.5, 1e-12);
  EXPECT_NEAR(lotcyto::wasserstein2(a, b), 1.0, 1e-12);
  expect_marginals(plan, a, b);
}

TEST(SolveOt, DimensionMismatch) {
  EXPECT_THROW(lotcyto::solve_ot(dirac({0}), dirac({0, 1})), lotcyto::InvalidInput);
}

TEST(SolveOt, PivotBudgetExhaustionCarriesObjective) {
  std::mt19937_64 rng(3);
  const auto a = oracle::random_measure(rng, 6, 2);
  const auto b = oracle::random_measure(rng, 6, 2);
  try {
    lotcyto::solve_ot(a, b, {.max_pivots = 1});
    FAIL() << "expected SolverError";
  } catch (const lotcyto::SolverError& e) {
    EXPECT_GT(e.best_objective(), 0.0);
  }
}

TEST(SolveOt, DualCertificate) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_measure(rng, 7, 2);
    const auto b = oracle::random_measure(rng, 9, 2);
    const auto sol = lotcyto::solve_ot_dual(a, b);
    const auto c = lotcyto::squared_distances(a.support(), b.support());
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      for (Eigen::Index j = 0; j < c.cols(); ++j)
        EXPECT_LE(sol.source_potential[i] + sol.target_potential[j], c(i, j) + 1e-9);
    const double dual =
        a.weights().dot(sol.source_potential) + b.weights().dot(sol.target_potential);
    EXPECT_NEAR(dual, sol.plan.cost, 1e-9);
  }
}

TEST(VertexOracle, PrunedAgreesWithExhaustiveEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> size(1, 5);
    const auto a = oracle::random_measure(rng, size(rng), 2);
    const auto b = oracle::random_measure(rng, size(rng), 2);
    EXPECT_NEAR(oracle::ot_vertex_enumeration(a, b, true),
                oracle::ot_vertex_enumeration(a, b, false), 1e-12);
  }
}

TEST(SolveOt, MatchesVertexEnumeration) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_int_distribution<int> dim(1, 3);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = dim(rng);
    const auto a = oracle::random_measure(rng, size(rng), d);
    const auto b = oracle::random_measure(rng, size(rng), d);
    const auto plan = lotcyto::solve_ot(a, b);
    EXPECT_NEAR(plan.cost, oracle::ot_vertex_enumeration(a, b), 1e-8) << "trial " << trial;
    expect_marginals(plan, a, b);
  }
}

TEST(SolveOt, UniformEqualSizeGivesPermutation) {
  std::mt19937_64 rng(99);
  for (int n : {2, 5, 16, 40}) {
    Points x = Points::Random(n, 3), y = Points::Random(n, 3);
    const auto a = DiscreteMeasure::uniform(x), b = DiscreteMeasure::uniform(y);
    const auto plan = lotcyto::solve_ot(a, b);
    for (Eigen::Index i = 0; i < n; ++i) {
      int nonzero = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double p = plan.matrix(i, j);
        if (p > 1e-12) {
          ++nonzero;
          EXPECT_NEAR(p, 1.0 / n, 1e-12);
        }
      }
      EXPECT_EQ(nonzero, 1);
    }
  }
}

TEST(Wasserstein2, MetricProperties) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(1, 6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = oracle::random_measure(rng, size(rng), 2);
    const auto b = oracle::random_measure(rng, size(rng), 2);
    const auto c = oracle::random_measure(rng, size(rng), 2);
    const double ab = lotcyto::wasserstein2(a, b);
    const double ba = lotcyto::wasserstein2(b, a);
    const double bc = lotcyto::wasserstein2(b, c);
    const double ac = lotcyto::wasserstein2(a, c);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, ba, 1e-8);
    EXPECT_LE(ac, ab + bc + 1e-8);
    EXPECT_GT(ab, 1e-6);  // distinct random measures
  }
}

TEST(Wasserstein2, ZeroForPermutedAtoms) {
  Points x(3, 2);
  x << 0, 0, 1, 2, -1, 3;
  Points y(3, 2);
  y << -1, 3, 0, 0, 1, 2;
  const DiscreteMeasure a(x, Eigen::Vector3d(0.2, 0.3, 0.5));
  const DiscreteMeasure b(y, Eigen::Vector3d(0.5, 0.2, 0.3));
  EXPECT_NEAR(lotcyto::solve_ot(a, b).cost, 0.0, 1e-14);
}

TEST(MapInducedPlan, Examples) {
  const auto a = uniform_1d({0, 2});
  const auto b = uniform_1d({1, 3});
  const std::vector<Eigen::Index> monotone{0, 1};
  const std::vector<Eigen::Index> crossed{1, 0};
  const auto p1 = lotcyto::map_induced_plan(a, monotone, b);
  const auto p2 = lotcyto::map_induced_plan(a, crossed, b);
  EXPECT_NEAR(p1.cost, 1.0, 1e-12);
  EXPECT_NEAR(p1.cost, lotcyto::solve_ot(a, b).cost, 1e-12);
  EXPECT_NEAR(p2.cost, 5.0, 1e-12);

  std::mt19937_64 rng(1);
  const auto mu = oracle::random_measure(rng, 4, 2);
  const std::vector<Eigen::Index> id{0, 1, 2, 3};
  const auto p3 = lotcyto::map_induced_plan(mu, id, mu);
  EXPECT_DOUBLE_EQ(p3.cost, 0.0);
  EXPECT_TRUE(p3.matrix.isApprox(Eigen::MatrixXd(mu.weights().asDiagonal())));
}

TEST(MapInducedPlan, RejectsInfeasibleMap) {
  const auto a = uniform_1d({0, 2});
  const auto b = uniform_1d({1, 3});
  const std::vector<Eigen::Index> both_to_first{0, 0};
  EXPECT_THROW(lotcyto::map_induced_plan(a, both_to_first, b), lotcyto::InvalidInput);
}

TEST(MapInducedPlan, UpperBoundsOptimum) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    // target = source atoms permuted and moved: any permutation is feasible
    const int n = 5;
    Points x = Points::Random(n, 2), y = Points::Random(n, 2);
    const auto a = DiscreteMeasure::uniform(x), b = DiscreteMeasure::uniform(y);
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_GE(lotcyto::map_induced_plan(a, perm, b).cost + 1e-12, lotcyto::solve_ot(a, b).cost);
  }
}

TEST(SolveOt, ModerateSizeIsFast) {
  std::mt19937_64 rng(8);
  const auto a = oracle::random_measure(rng, 64, 7);
  const auto b = oracle::random_measure(rng, 64, 7);
  const auto t0 = std::chrono::steady_clock::now();
  const auto plan = lotcyto::solve_ot(a, b);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  expect_marginals(plan, a, b);
  EXPECT_LT(secs, 1.0);
}
