// Acceptance run: one PASS/FAIL/SKIP line per criterion, nonzero exit if any
// criterion fails. The HIPC check runs only when LOTCYTO_HIPC_MANIFEST points
// at a manifest for the public dataset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lotcyto/pipeline.hpp"
#include "lotcyto/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lotcyto;

namespace {

struct Outcome {
  enum { pass, fail, skip } status = pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(n, d);
  for (auto& v : m.reshaped()) v = g(rng);
  return m;
}

// 1 ---------------------------------------------------------------------------
Outcome ot_oracle() {
  std::mt19937_64 rng(20240101);
  std::uniform_int_distribution<int> atoms(1, 6), dims(1, 3);
  const auto start = Clock::now();
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int d = dims(rng);
    const auto a = oracle::random_measure(rng, atoms(rng), d, 2.0);
    const auto b = oracle::random_measure(rng, atoms(rng), d, 2.0);
    worst = std::max(worst, std::abs(solve_ot(a, b).cost - oracle::ot_vertex_enumeration(a, b)));
  }
  const double secs = since(start);
  return verdict(worst <= 1e-8 && secs < 10.0,
                 "200 pairs, max |cost - oracle| = " + fmt(worst) + ", " + fmt(secs) + " s");
}

// 2 ---------------------------------------------------------------------------
Outcome proposition1() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> count(1, 5), atoms(1, 50), dims(1, 3);
  const Eigen::Index ks[] = {2, 4, 8};
  const auto start = Clock::now();
  double worst = 0.0;
  int runs = 0;
  while (runs < 50) {
    const int n = count(rng), d = dims(rng);
    std::vector<DiscreteMeasure> ms;
    for (int i = 0; i < n; ++i) ms.push_back(oracle::random_measure(rng, atoms(rng), d));
    const Eigen::Index k = ks[runs % 3];
    Eigen::Index total = 0;
    for (const auto& m : ms) total += m.size();
    if (total < k) continue;  // k-means needs k distinct points
    const auto q = quantize_ensemble(ms, k, static_cast<std::uint64_t>(runs));
    worst = std::max(worst, verify_proposition1(ms, q).gap);
    ++runs;
  }
  const double secs = since(start);
  return verdict(worst <= 1e-7 && secs < 60.0,
                 "50 ensembles, max gap = " + fmt(worst) + ", " + fmt(secs) + " s");
}

// 3 ---------------------------------------------------------------------------
Outcome lot_isometry() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.0, 1.0);
  double exact_err = 0.0, excess = -1.0;
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + t % 6, d = 1 + t % 3;
    // uniform reference and uniform targets of the same size: optimal plans are permutations
    Points x(k, d);
    for (auto& v : x.reshaped()) v = u(rng);
    ReferenceMeasure ref;
    ref.strategy = ReferenceStrategy::uniform_centers;
    ref.measures.push_back(DiscreteMeasure::uniform(x));
    QuantizedEnsemble q;
    q.support.resize(3 * k, d);
    for (auto& v : q.support.reshaped()) v = 2.0 * u(rng);
    q.weights = Eigen::MatrixXd::Zero(4, 3 * k);
    for (int i = 0; i < 4; ++i) {
      std::vector<int> idx(static_cast<std::size_t>(3 * k));
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int c = 0; c < k; ++c) q.weights(i, idx[static_cast<std::size_t>(c)]) = 1.0 / k;
      q.sample_ids.push_back("u" + std::to_string(i));
    }
    const auto emb = embed_ensemble(q, ref);
    for (Eigen::Index i = 0; i < 4; ++i)
      exact_err = std::max(exact_err, std::abs(weighted_norm(emb.displacements[static_cast<std::size_t>(i)],
                                                             emb.inner_weights) -
                                               wasserstein2(ref.measure(), q.measure(i))));

    // general weights against a barycenter reference
    QuantizedEnsemble g;
    g.support.resize(k + 3, d);
    for (auto& v : g.support.reshaped()) v = 2.0 * u(rng);
    g.weights.resize(4, k + 3);
    for (auto& v : g.weights.reshaped()) v = 0.05 + w(rng);
    for (int i = 0; i < 4; ++i) {
      g.weights.row(i) /= g.weights.row(i).sum();
      g.sample_ids.push_back("g" + std::to_string(i));
    }
    const auto gref = make_reference(g, ReferenceStrategy::barycenter, static_cast<std::uint64_t>(t));
    const auto gemb = embed_ensemble(g, gref);
    for (Eigen::Index i = 0; i < 4; ++i)
      excess = std::max(excess, weighted_norm(gemb.displacements[static_cast<std::size_t>(i)], gemb.inner_weights) -
                                    wasserstein2(gref.measure(), g.measure(i)));
  }
  return verdict(exact_err <= 1e-8 && excess <= 1e-8,
                 "deterministic max |norm - W2| = " + fmt(exact_err) + ", general max(norm - W2) = " + fmt(excess));
}

// 4 ---------------------------------------------------------------------------
Outcome barycenter_descent() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.0, 1.0);
  bool monotone = true;
  int runs = 0;
  for (int t = 0; t < 20; ++t)
    for (auto mode : {BarycenterWeights::fixed_uniform, BarycenterWeights::free}) {
      QuantizedEnsemble q;
      const int k = 3 + t % 5, d = 1 + t % 3;
      q.support.resize(k, d);
      for (auto& v : q.support.reshaped()) v = u(rng);
      q.weights.resize(3 + t % 3, k);
      for (auto& v : q.weights.reshaped()) v = w(rng) < 0.2 ? 0.0 : w(rng);
      for (Eigen::Index i = 0; i < q.weights.rows(); ++i) {
        if (q.weights.row(i).sum() == 0.0) q.weights(i, 0) = 1.0;
        q.weights.row(i) /= q.weights.row(i).sum();
        q.sample_ids.push_back(std::to_string(i));
      }
      BarycenterOptions opt;
      opt.weights = mode;
      const auto r = wasserstein_barycenter(q, 1 + t % k, static_cast<std::uint64_t>(t), opt);
      for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
        monotone = monotone && r.objective_trace[i] <= r.objective_trace[i - 1];
      ++runs;
    }

  double midpoint_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    QuantizedEnsemble q;
    q.support.resize(2, 3);
    for (auto& v : q.support.reshaped()) v = u(rng);
    q.weights = Eigen::Matrix2d::Identity();
    q.sample_ids = {"x", "y"};
    const auto r = wasserstein_barycenter(q, 1, static_cast<std::uint64_t>(t));
    const Eigen::RowVectorXd mid = 0.5 * (q.support.row(0) + q.support.row(1));
    midpoint_err = std::max(midpoint_err, (r.measure().support().row(0) - mid).cwiseAbs().maxCoeff());
  }
  return verdict(monotone && midpoint_err <= 1e-6,
                 std::to_string(runs) + " runs monotone=" + (monotone ? "yes" : "no") +
                     ", two-Dirac midpoint error = " + fmt(midpoint_err));
}

// 5 ---------------------------------------------------------------------------
Outcome kme_kernel() {
  std::mt19937_64 rng(505);
  const Eigen::MatrixXd x = gaussian(rng, 1000, 3), y = gaussian(rng, 1000, 3);
  const double sigma = 5.0;
  const Eigen::MatrixXd freq = draw_rff_frequencies(4096, 3, sigma, 5);
  const Eigen::MatrixXd fx = rff_features(x, freq), fy = rff_features(y, freq);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 1000; ++i) {
    const double exact = std::exp(-(x.row(i) - y.row(i)).squaredNorm() / (2 * sigma * sigma));
    worst = std::max(worst, std::abs(fx.row(i).dot(fy.row(i)) - exact));
  }
  return verdict(worst <= 0.02, "1000 pairs, max |estimate - kernel| = " + fmt(worst));
}

// 6 ---------------------------------------------------------------------------
Outcome silhouette_check() {
  Eigen::MatrixXd x(4, 1);
  x << 0, 0.1, 10, 10.1;
  const auto s = silhouette(x, {0, 0, 1, 1});
  // a = 0.1 for all points; b = 10.05 for the outer points and 9.95 for the inner ones
  const double hand = 0.5 * ((10.05 - 0.1) / 10.05 + (9.95 - 0.1) / 9.95);
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> lab(0, 3);
  bool bounded = true;
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd f = gaussian(rng, 25, 3);
    std::vector<int> labels(25);
    for (auto& l : labels) l = lab(rng);
    labels[0] = 0, labels[1] = 1;
    const auto r = silhouette(f, labels);
    bounded = bounded && r.score >= -1.0 && r.score <= 1.0;
    for (double p : r.per_point) bounded = bounded && p >= -1.0 && p <= 1.0;
  }
  return verdict(std::abs(s.score - hand) <= 1e-6 && bounded,
                 "example score " + fmt(s.score, 6) + " vs hand " + fmt(hand, 6) + ", bounds " +
                     (bounded ? "held" : "violated"));
}

// 7 ---------------------------------------------------------------------------
Outcome mst_check() {
  std::mt19937_64 rng(707);
  double worst = 0.0;
  int cases = 0;
  for (int k = 1; k <= 6; ++k)
    for (int t = 0; t < 20; ++t, ++cases) {
      const Points c = gaussian(rng, k, 1 + t % 3);
      worst = std::max(worst, std::abs(mst(c).total_weight - oracle::mst_brute_force(c)));
    }
  return verdict(worst <= 1e-12, std::to_string(cases) + " instances, max |weight - brute force| = " + fmt(worst));
}

// 8 ---------------------------------------------------------------------------
Outcome synthetic_benchmark() {
  const auto start = Clock::now();
  const Dataset ds = make_synthetic(SynthOptions{}, 1);
  RunConfig c;
  c.k = 64;
  c.seed = 1;
  const auto rows = compare_methods(ds, c, {64});
  const double secs = since(start);
  for (const auto& r : rows)
    if (!r.error.empty()) return {Outcome::fail, "row " + r.label + ": " + r.error};
  const double lot = *rows[1].lot_pca, comp = *rows[1].comp_pca, kme = *rows[0].kme_pca;
  return verdict(lot >= 0.5 && lot > comp && lot > kme && secs < 300.0,
                 "PCA silhouettes LinW2 " + fmt(lot) + ", Comp " + fmt(comp) + ", KME " + fmt(kme) + " (raw " +
                     fmt(*rows[1].lot_raw) + ", " + fmt(*rows[1].comp_raw) + ", " + fmt(*rows[0].kme_raw) + "), " +
                     fmt(secs) + " s");
}

// 9 ---------------------------------------------------------------------------
Outcome hipc() {
  const char* manifest = std::getenv("LOTCYTO_HIPC_MANIFEST");
  if (!manifest || !fs::exists(manifest))
    return {Outcome::skip, "set LOTCYTO_HIPC_MANIFEST to the public HIPC manifest to run"};
  const auto start = Clock::now();
  const Dataset ds = load_samples(manifest);
  RunConfig c;
  c.k = 64;
  c.seed = 0;
  const auto rows = compare_methods(ds, c, {64});
  for (const auto& r : rows)
    if (!r.error.empty()) return {Outcome::fail, "row " + r.label + ": " + r.error};
  const double lot = *rows[1].lot_pca, kme = *rows[0].kme_raw;
  const double secs = since(start);
  return verdict(std::abs(lot - 0.65) <= 0.05 && std::abs(kme + 0.02) <= 0.05 && secs <= 1800.0,
                 "LinW2 PCA " + fmt(lot) + " (target 0.65), KME raw " + fmt(kme) + " (target -0.02), " +
                     fmt(secs) + " s");
}

// 10 --------------------------------------------------------------------------
Outcome classification() {
  std::mt19937_64 rng(1010);
  const int n = 40, pos = 16;
  Eigen::MatrixXd x = gaussian(rng, n, 6);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = i < pos;
    x.row(i).head(2).array() += i < pos ? 6.0 : -6.0;
  }
  const PcaResult p = pca(x, 3);
  const double separable = loo_logistic(p.coordinates, y).balanced_accuracy;
  double mean = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 perm(static_cast<std::uint64_t>(seed));
    std::vector<int> shuffled = y;
    std::shuffle(shuffled.begin(), shuffled.end(), perm);
    mean += loo_logistic(p.coordinates, shuffled).balanced_accuracy / 20.0;
  }
  return verdict(separable == 1.0 && std::abs(mean - 0.5) <= 0.1,
                 "separable BA " + fmt(separable) + ", permuted mean BA " + fmt(mean));
}

// 11 --------------------------------------------------------------------------
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "lotcyto_acceptance_determinism";
  fs::remove_all(root);
  SynthOptions o;
  o.cells = 200;
  const auto manifest = write_dataset(make_synthetic(o, 9), root / "data");
  const auto run = [&](const std::string& out) {
    const std::string cmd = std::string("\"") + LOTCYTO_CLI + "\" run --seed 5 --k 16 --mst true --manifest \"" +
                            manifest.string() + "\" --out \"" + (root / out).string() + "\" > /dev/null";
    return std::system(cmd.c_str());
  };
  if (run("a") != 0 || run("b") != 0) return {Outcome::fail, "lotcyto run exited nonzero"};
  int compared = 0;
  std::string mismatch;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (entry.path().extension() != ".csv") continue;
    ++compared;
    if (io::read_text(entry.path()) != io::read_text(root / "b" / entry.path().filename()))
      mismatch = entry.path().filename().string();
  }
  fs::remove_all(root);
  return verdict(mismatch.empty() && compared >= 5,
                 std::to_string(compared) + " CSV files compared" + (mismatch.empty() ? "" : ", differs: " + mismatch));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 OT oracle equivalence", ot_oracle},
      {"2 mean-measure quantization identity", proposition1},
      {"3 LOT reference isometry", lot_isometry},
      {"4 barycenter descent and midpoint", barycenter_descent},
      {"5 KME kernel approximation", kme_kernel},
      {"6 silhouette correctness", silhouette_check},
      {"7 MST optimality", mst_check},
      {"8 synthetic multi-lab benchmark", synthetic_benchmark},
      {"9 HIPC reproduction", hipc},
      {"10 classification sanity", classification},
      {"11 determinism of run", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::skip ? "SKIP" : "FAIL";
    if (o.status == Outcome::fail) ++failures;
    std::cout << "[" << tag << "] " << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
