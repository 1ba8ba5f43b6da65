#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "lotcyto/analysis.hpp"
#include "lotcyto/baselines.hpp"
#include "lotcyto/barycenter.hpp"
#include "lotcyto/config.hpp"
#include "lotcyto/io.hpp"
#include "lotcyto/lot.hpp"
#include "lotcyto/manifest.hpp"
#include "lotcyto/quantize.hpp"
#include "lotcyto/render.hpp"

namespace lotcyto {

inline constexpr const char* kVersion = "0.1.0";

/// A failure inside one named pipeline stage. what() reads "[stage] message".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

class StageClock {
 public:
  template <class F>
  auto run(const std::string& stage, F&& f) -> decltype(f()) {
    const auto start = std::chrono::steady_clock::now();
    const auto record = [&] {
      timings.push_back(
          {stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    };
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        record();
      } else {
        auto out = f();
        record();
        return out;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }

  std::vector<StageTiming> timings;
};

/// Feature matrix of one embedding method plus the intermediates it came from.
struct Embedding {
  EmbeddingMethod method = EmbeddingMethod::lot;
  Eigen::MatrixXd features;
  std::vector<std::string> feature_names;
  std::optional<QuantizedEnsemble> ensemble;  // lot and comp
  std::optional<ReferenceMeasure> reference;  // lot
  std::optional<KmeEmbedding> kme;            // kme (frequencies kept for inspection)
};

inline ReferenceOptions reference_options(const RunConfig& c) {
  ReferenceOptions o;
  o.barycenter.max_iterations = c.barycenter_max_iterations;
  o.barycenter.weights = c.barycenter_weights;
  return o;
}

inline Embedding lot_features(QuantizedEnsemble ensemble, const RunConfig& config,
                              const std::vector<std::string>& markers, StageClock& clock) {
  Embedding e;
  e.method = EmbeddingMethod::lot;
  e.reference = clock.run("reference", [&] {
    return make_reference(ensemble, config.reference_strategy, config.seed, reference_options(config));
  });
  clock.run("embed", [&] {
    const LotEmbedding lot = embed_ensemble(ensemble, *e.reference);
    e.features = as_feature_matrix(lot, config.inner_product);
    const Eigen::Index rows = lot.inner_weights.size();
    for (Eigen::Index k = 0; k < rows; ++k)
      for (const auto& m : markers) e.feature_names.push_back("v" + std::to_string(k) + "_" + m);
  });
  e.ensemble = std::move(ensemble);
  return e;
}

inline Embedding comp_features(QuantizedEnsemble ensemble, const RunConfig& config, StageClock& clock) {
  Embedding e;
  e.method = EmbeddingMethod::comp;
  clock.run("embed", [&] {
    e.features = clr_transform(ensemble, config.pseudo_count).clr_matrix;
    e.feature_names = numbered_columns("clr", ensemble.k());
  });
  e.ensemble = std::move(ensemble);
  return e;
}

inline Embedding kme_features(const Dataset& data, const RunConfig& config, StageClock& clock) {
  Embedding e;
  e.method = EmbeddingMethod::kme;
  clock.run("embed", [&] {
    const Eigen::Index s = config.effective_kme_s(static_cast<Eigen::Index>(data.markers.size()));
    e.kme = kme_embed(data.measures, s, config.kme_sigma, config.seed);
    e.features = e.kme->features;
    e.feature_names = numbered_columns("rff", s);
  });
  return e;
}

inline QuantizedEnsemble quantize_stage(const Dataset& data, Eigen::Index k, std::uint64_t seed,
                                        StageClock& clock) {
  return clock.run("quantize", [&] { return quantize_ensemble(data.measures, k, seed); });
}

inline Embedding compute_embedding(const Dataset& data, const RunConfig& config, StageClock& clock) {
  switch (config.embedding_method) {
    case EmbeddingMethod::kme: return kme_features(data, config, clock);
    case EmbeddingMethod::comp: return comp_features(quantize_stage(data, config.k, config.seed, clock), config, clock);
    case EmbeddingMethod::lot:
      return lot_features(quantize_stage(data, config.k, config.seed, clock), config, data.markers, clock);
  }
  throw InvalidInput("unknown embedding method");
}

/// PCA with the component count clipped to the rank bound min(N, p).
inline PcaResult clipped_pca(const Eigen::MatrixXd& features, Eigen::Index c) {
  return pca(features, std::min({c, features.rows(), features.cols()}));
}

struct SilhouettePair {
  std::vector<std::string> labels;
  SilhouetteResult raw;
  SilhouetteResult pca;
};

/// Silhouettes on the raw features and on the PCA scores, when the manifest
/// has at least two distinct labels under `key`.
inline std::optional<SilhouettePair> silhouettes(const Eigen::MatrixXd& features, const PcaResult& p,
                                                 const SampleManifest& manifest, const std::string& key) {
  if (!manifest.has_labels(key)) return std::nullopt;
  auto labels = manifest.labels(key);
  if (std::set<std::string>(labels.begin(), labels.end()).size() < 2) return std::nullopt;
  const auto codes = encode_labels(labels);
  return SilhouettePair{std::move(labels), silhouette(features, codes), silhouette(p.coordinates, codes)};
}

struct ClassificationSet {
  std::vector<Eigen::Index> rows;    // indices into the dataset
  std::vector<int> labels;           // 1 when MRD-BioM exceeds the threshold
};

/// Follow-up samples with a molecular MRD value, labelled against the threshold.
inline ClassificationSet classification_set(const SampleManifest& manifest, double threshold) {
  ClassificationSet s;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (e.kind != SampleKind::followup || !e.mrd_biom) continue;
    s.rows.push_back(static_cast<Eigen::Index>(i));
    s.labels.push_back(*e.mrd_biom > threshold ? 1 : 0);
  }
  return s;
}

struct PipelineResult {
  RunConfig config;
  std::vector<std::string> sample_ids;
  std::vector<std::string> markers;
  Embedding embedding;
  PcaResult pca;
  std::optional<SilhouettePair> silhouette;
  std::optional<ClassificationReport> classification;
  ClassificationSet classification_rows;
  std::vector<StageTiming> timings;
};

inline PipelineResult compute_pipeline(const Dataset& data, const RunConfig& config) {
  config.validate();
  StageClock clock;
  PipelineResult r;
  r.config = config;
  r.markers = data.markers;
  for (const auto& m : data.measures) r.sample_ids.push_back(m.id());
  r.embedding = compute_embedding(data, config, clock);
  r.pca = clock.run("pca", [&] { return clipped_pca(r.embedding.features, config.pca_components); });
  r.silhouette = clock.run("silhouette", [&] {
    return silhouettes(r.embedding.features, r.pca, data.manifest, config.label_key);
  });
  if (config.classify) {
    clock.run("classify", [&] {
      r.classification_rows = classification_set(data.manifest, config.mrd_threshold);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(r.classification_rows.rows.size()), r.pca.coordinates.cols());
      for (std::size_t i = 0; i < r.classification_rows.rows.size(); ++i)
        x.row(static_cast<Eigen::Index>(i)) = r.pca.coordinates.row(r.classification_rows.rows[i]);
      r.classification = loo_logistic(x, r.classification_rows.labels);
    });
  }
  r.timings = std::move(clock.timings);
  return r;
}

// ---------------------------------------------------------------------------
// Artifact writers

inline Table centers_table(const QuantizedEnsemble& q, const std::vector<std::string>& markers) {
  Table t;
  t.header = markers;
  t.values = q.support;
  for (Eigen::Index k = 0; k < q.k(); ++k) t.row_labels.push_back(std::to_string(k));
  return t;
}

inline Table weights_table(const QuantizedEnsemble& q) {
  return {numbered_columns("w", q.k()), q.sample_ids, q.weights};
}

/// Reference atoms as rows of (measure index, coordinates, weight).
inline Table reference_table(const ReferenceMeasure& ref, const std::vector<std::string>& markers) {
  Table t;
  t.header = markers;
  t.header.push_back("weight");
  Eigen::Index rows = 0;
  for (const auto& m : ref.measures) rows += m.size();
  t.values.resize(rows, static_cast<Eigen::Index>(markers.size()) + 1);
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < ref.measures.size(); ++i) {
    const auto& m = ref.measures[i];
    t.values.block(off, 0, m.size(), m.dim()) = m.support();
    t.values.block(off, m.dim(), m.size(), 1) = m.weights();
    for (Eigen::Index a = 0; a < m.size(); ++a) t.row_labels.push_back(std::to_string(i));
    off += m.size();
  }
  return t;
}

/// Inverse of reference_table.
inline ReferenceMeasure reference_from_table(const Table& t, ReferenceStrategy strategy) {
  if (t.header.size() < 2 || t.header.back() != "weight")
    throw InvalidInput("reference table needs coordinate columns followed by 'weight'");
  const Eigen::Index d = static_cast<Eigen::Index>(t.header.size()) - 1;
  ReferenceMeasure ref;
  ref.strategy = strategy;
  Eigen::Index start = 0;
  for (Eigen::Index r = 1; r <= t.values.rows(); ++r) {
    if (r < t.values.rows() && t.row_labels[static_cast<std::size_t>(r)] == t.row_labels[static_cast<std::size_t>(start)])
      continue;
    ref.measures.emplace_back(Points(t.values.block(start, 0, r - start, d)),
                              Weights(t.values.block(start, d, r - start, 1)),
                              "reference" + t.row_labels[static_cast<std::size_t>(start)]);
    start = r;
  }
  if (ref.measures.empty()) throw InvalidInput("reference table is empty");
  return ref;
}

inline QuantizedEnsemble ensemble_from_tables(const Table& centers, const Table& weights) {
  if (weights.values.cols() != centers.values.rows())
    throw InvalidInput("weights have " + std::to_string(weights.values.cols()) + " columns but there are " +
                       std::to_string(centers.values.rows()) + " centers");
  QuantizedEnsemble q;
  q.support = centers.values;
  q.weights = weights.values;
  q.sample_ids = weights.row_labels;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double s = q.weights.row(i).sum();
    if ((q.weights.row(i).array() < 0.0).any() || std::abs(s - 1.0) > kSimplexTolerance)
      throw InvalidInput("weights row '" + q.sample_ids[static_cast<std::size_t>(i)] + "' is not on the simplex");
  }
  return q;
}

inline Table pca_table(const PcaResult& p, const std::vector<std::string>& ids) {
  std::vector<std::string> names;
  for (Eigen::Index c = 1; c <= p.n_components(); ++c) names.push_back("PC" + std::to_string(c));
  return {names, ids, p.coordinates};
}

inline nlohmann::json silhouette_json(const std::optional<SilhouettePair>& s, const std::string& key,
                                      const std::vector<std::string>& ids, Eigen::Index pca_components) {
  nlohmann::json j;
  j["label_key"] = key;
  j["pca_components"] = pca_components;
  if (!s) {
    j["labels"] = nullptr;
    j["raw"] = nullptr;
    j["pca"] = nullptr;
    return j;
  }
  j["labels"] = s->labels;
  j["sample_ids"] = ids;
  j["raw"] = {{"score", s->raw.score}, {"per_point", s->raw.per_point}};
  j["pca"] = {{"score", s->pca.score}, {"per_point", s->pca.per_point}};
  return j;
}

inline nlohmann::json classification_json(const ClassificationReport& r, const ClassificationSet& set,
                                          const std::vector<std::string>& ids, double threshold) {
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < set.rows.size(); ++i)
    samples.push_back({{"sample_id", ids[static_cast<std::size_t>(set.rows[i])]},
                       {"label", set.labels[i]},
                       {"prediction", r.predictions[i]},
                       {"probability", r.probabilities[i]}});
  return {{"mrd_threshold", threshold},
          {"confusion", {{"tp", r.tp}, {"fn", r.fn}, {"fp", r.fp}, {"tn", r.tn}}},
          {"balanced_accuracy", r.balanced_accuracy},
          {"samples", samples}};
}

inline std::string safe_file_stem(const std::string& id) {
  std::string out;
  for (char ch : id) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.') ? ch : '_';
  return out;
}

inline std::string pca_scatter(const PipelineResult& r, const Dataset& data) {
  const Eigen::Index c = std::min<Eigen::Index>(r.config.plot_components, r.pca.n_components());
  std::vector<ScatterPoint> pts;
  const auto groups = data.manifest.labels(r.config.label_key);
  for (std::size_t i = 0; i < r.sample_ids.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    ScatterPoint p;
    p.x = r.pca.coordinates(row, 0);
    p.y = c >= 2 ? r.pca.coordinates(row, 1) : 0.0;
    p.group = groups[i];
    p.size_value = data.manifest.entries[i].mrd_biom;
    p.title = r.sample_ids[i];
    pts.push_back(std::move(p));
  }
  return scatter_svg(pts, "PC1", c >= 2 ? "PC2" : "");
}

/// Writes every artifact of `r` into `dir` and returns the file names.
inline std::vector<std::string> write_artifacts(const PipelineResult& r, const Dataset& data,
                                                const std::filesystem::path& dir) {
  std::vector<std::string> files;
  const auto put = [&](const std::string& name, const std::string& text) {
    io::write_text(dir / name, text);
    files.push_back(name);
  };
  const auto& e = r.embedding;
  if (e.ensemble) {
    put("centers.csv", to_csv(centers_table(*e.ensemble, r.markers), "center"));
    put("weights.csv", to_csv(weights_table(*e.ensemble)));
  }
  if (e.reference) put("reference.csv", to_csv(reference_table(*e.reference, r.markers), "measure"));
  put("features.csv", to_csv(Table{e.feature_names, r.sample_ids, e.features}));
  put("pca.csv", to_csv(pca_table(r.pca, r.sample_ids)));
  put("silhouette.json",
      silhouette_json(r.silhouette, r.config.label_key, r.sample_ids, r.pca.n_components()).dump(2) + "\n");
  if (r.classification)
    put("classification.json",
        classification_json(*r.classification, r.classification_rows, r.sample_ids, r.config.mrd_threshold).dump(2) +
            "\n");
  if (r.config.mst && e.ensemble) {
    const Mst tree = mst(e.ensemble->support);
    for (Eigen::Index i = 0; i < e.ensemble->size(); ++i) {
      const auto& id = e.ensemble->sample_ids[static_cast<std::size_t>(i)];
      put("mst_" + safe_file_stem(id) + ".dot", mst_to_dot(tree, mst_node_sizes(*e.ensemble, i), id));
    }
  }
  put("scatter.svg", pca_scatter(r, data));
  put("config.txt", to_text(r.config));
  return files;
}

inline nlohmann::json run_metadata(const PipelineResult& r, const Dataset& data,
                                   const std::vector<std::string>& files) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& key : RunConfig::keys()) cfg[key] = r.config.get(key);
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& t : r.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  nlohmann::json j = {{"version", kVersion},
                      {"seed", r.config.seed},
                      {"config", cfg},
                      {"manifest", data.manifest.path.string()},
                      {"n_samples", r.sample_ids.size()},
                      {"markers", r.markers},
                      {"pca_components_used", r.pca.n_components()},
                      {"explained_variance_ratio",
                       std::vector<double>(r.pca.explained_variance_ratio.data(),
                                           r.pca.explained_variance_ratio.data() + r.pca.explained_variance_ratio.size())},
                      {"timings", timings},
                      {"outputs", files}};
  if (r.embedding.ensemble) j["kmeans_inertia"] = r.embedding.ensemble->kmeans_inertia;
  if (r.embedding.reference && !r.embedding.reference->objective_trace.empty())
    j["barycenter_objective"] = r.embedding.reference->objective_trace;
  if (r.embedding.reference && !r.embedding.reference->chosen.empty())
    j["reference_samples"] = r.embedding.reference->chosen;
  return j;
}

/// Full pipeline: compute, then write artifacts into a staging directory next
/// to `config.output_dir` and move them in place only when everything worked.
/// On failure the staging directory is removed and the error names the stage.
inline PipelineResult run_pipeline(const Dataset& data, const RunConfig& config) {
  namespace fs = std::filesystem;
  PipelineResult r = compute_pipeline(data, config);
  const fs::path out = config.output_dir;
  const fs::path staging = out.string() + ".partial";
  const auto start = std::chrono::steady_clock::now();
  try {
    fs::remove_all(staging);
    fs::create_directories(staging);
    auto files = write_artifacts(r, data, staging);
    r.timings.push_back(
        {"write", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    files.push_back("run.json");
    io::write_text(staging / "run.json", run_metadata(r, data, files).dump(2) + "\n");
    if (!fs::exists(out)) {
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      fs::rename(staging, out);
    } else {
      for (const auto& f : files) fs::rename(staging / f, out / f);
      fs::remove_all(staging);
    }
  } catch (const std::exception& e) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw StageError("write", e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Experiment drivers

struct SweepRow {
  Eigen::Index k = 0;
  std::optional<double> silhouette_raw, silhouette_pca;
  std::optional<double> seconds;
  std::string error;  // nonempty when this k failed
};

inline std::vector<SweepRow> sweep_k(const Dataset& data, RunConfig config, const std::vector<Eigen::Index>& ks) {
  if (ks.empty()) throw InvalidInput("sweep_k: no k values");
  std::vector<SweepRow> rows;
  for (Eigen::Index k : ks) {
    SweepRow row;
    row.k = k;
    config.k = k;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto r = compute_pipeline(data, config);
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (r.silhouette) {
        row.silhouette_raw = r.silhouette->raw.score;
        row.silhouette_pca = r.silhouette->pca.score;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {
inline std::string cell(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string{}; }
}  // namespace detail

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "k,silhouette_raw,silhouette_pca,wall_clock_seconds\n";
  for (const auto& r : rows)
    out += std::to_string(r.k) + "," + detail::cell(r.silhouette_raw) + "," + detail::cell(r.silhouette_pca) +
           "," + detail::cell(r.seconds) + "\n";
  return out;
}

/// One row of the method comparison: silhouettes of KME, compositional and
/// LOT embeddings on raw features and on PCA scores.
struct CompareRow {
  std::string label;  // "None" for the quantization-free KME row, else K
  std::optional<double> kme_raw, kme_pca, comp_raw, comp_pca, lot_raw, lot_pca;
  std::string error;
};

inline std::vector<CompareRow> compare_methods(const Dataset& data, RunConfig config,
                                               const std::vector<Eigen::Index>& ks) {
  config.validate();
  if (!data.manifest.has_labels(config.label_key))
    throw InvalidInput("compare: manifest has no '" + config.label_key + "' labels");
  std::vector<CompareRow> rows;
  const auto score = [&](const Eigen::MatrixXd& f, std::optional<double>& raw, std::optional<double>& pca_score) {
    const PcaResult p = clipped_pca(f, config.pca_components);
    const auto s = silhouettes(f, p, data.manifest, config.label_key);
    if (!s) throw InvalidInput("compare: fewer than two distinct labels");
    raw = s->raw.score;
    pca_score = s->pca.score;
  };

  CompareRow none;
  none.label = "None";
  try {
    StageClock clock;
    score(kme_features(data, config, clock).features, none.kme_raw, none.kme_pca);
  } catch (const std::exception& e) {
    none.error = e.what();
  }
  rows.push_back(std::move(none));

  for (Eigen::Index k : ks) {
    CompareRow row;
    row.label = std::to_string(k);
    try {
      RunConfig c = config;
      c.k = k;
      StageClock clock;
      QuantizedEnsemble q = quantize_stage(data, k, c.seed, clock);
      score(comp_features(q, c, clock).features, row.comp_raw, row.comp_pca);
      score(lot_features(std::move(q), c, data.markers, clock).features, row.lot_raw, row.lot_pca);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  using detail::cell;
  std::string out = "K,KME_Raw,KME_PCA,Comp_Raw,Comp_PCA,LinW2_Raw,LinW2_PCA\n";
  for (const auto& r : rows)
    out += r.label + "," + cell(r.kme_raw) + "," + cell(r.kme_pca) + "," + cell(r.comp_raw) + "," +
           cell(r.comp_pca) + "," + cell(r.lot_raw) + "," + cell(r.lot_pca) + "\n";
  return out;
}

}  // namespace lotcyto
