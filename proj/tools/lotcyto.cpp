// Command-line front end. Every subcommand takes --seed; failures print
// "lotcyto: [stage] message" to stderr and exit with status 1.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lotcyto/pipeline.hpp"
#include "lotcyto/synth.hpp"

namespace fs = std::filesystem;
using namespace lotcyto;

namespace {

// Flags that mirror RunConfig keys. Values are applied through RunConfig::set
// so the command line and the config file share one parser.
struct ConfigFlags {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, std::string>> flag_to_key;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    flag_to_key.emplace_back(flag, key);
    app->add_option_function<std::string>(
        "--" + flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  RunConfig resolve(std::uint64_t seed) const {
    RunConfig c = config_file ? load_config(*config_file) : RunConfig{};
    for (const auto& [key, v] : values) c.set(key, v);
    c.seed = seed;
    c.validate();
    return c;
  }
};

void add_run_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config_file, "config file (key = value lines); flags override it");
  f.add(app, "k", "k", "number of quantization centers");
  f.add(app, "method", "embedding_method", "lot, comp or kme");
  f.add(app, "reference", "reference_strategy", "barycenter, uniform_centers, random_sample or pair");
  f.add(app, "barycenter-weights", "barycenter_weights", "fixed or free");
  f.add(app, "barycenter-iters", "barycenter_max_iterations", "barycenter iteration cap");
  f.add(app, "inner-product", "inner_product", "weighted or plain");
  f.add(app, "pca-components", "pca_components", "PCA components used for scoring");
  f.add(app, "plot-components", "plot_components", "PCA components drawn in the scatter plot");
  f.add(app, "kme-s", "kme_s", "random Fourier feature count (0: K*d)");
  f.add(app, "kme-sigma", "kme_sigma", "Gaussian kernel bandwidth");
  f.add(app, "pseudo-count", "pseudo_count", "CLR pseudo-count");
  f.add(app, "label-key", "label_key", "manifest field used as silhouette labels");
  f.add(app, "mrd-threshold", "mrd_threshold", "MRD-BioM positivity threshold in percent");
  f.add(app, "classify", "classify", "run leave-one-out classification (true/false)");
  f.add(app, "mst", "mst", "write per-sample MST DOT files (true/false)");
  f.add(app, "out", "output_dir", "output directory");
}

std::vector<Eigen::Index> parse_ks(const std::string& text) {
  std::vector<Eigen::Index> ks;
  for (const auto& part : io::split(text)) {
    double v;
    if (!io::parse_double(part, v) || v < 1 || v != std::floor(v))
      throw InvalidInput("--ks: '" + part + "' is not a positive integer");
    ks.push_back(static_cast<Eigen::Index>(v));
  }
  if (ks.empty()) throw InvalidInput("--ks: empty list");
  return ks;
}

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (path) io::write_text(*path, text);
  else std::cout << text;
}

template <class F>
int stage(const std::string& name, F&& f) {
  try {
    f();
    return 0;
  } catch (const StageError& e) {
    std::cerr << "lotcyto: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "lotcyto: [" << name << "] " << e.what() << "\n";
  }
  return 1;
}

// Rows of `labels_by_id` in the order of the table's row labels.
std::vector<std::string> labels_for(const Table& t, const SampleManifest& m, const std::string& key) {
  std::map<std::string, std::string> by_id;
  const auto all = m.labels(key);
  for (std::size_t i = 0; i < m.entries.size(); ++i) by_id[m.entries[i].sample_id] = all[i];
  std::vector<std::string> out;
  for (const auto& id : t.row_labels) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InvalidInput("sample '" + id + "' is not in the manifest");
    if (it->second.empty()) throw InvalidInput("sample '" + id + "' has no " + key + " label");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lotcyto: linearized optimal transport for cytometry cohorts"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  const auto seed_option = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed (required for reproducibility)")->required();
  };
  std::string manifest, centers, weights, reference, features, sample;
  std::optional<std::string> out;
  std::string ks_text;

  // run / sweep-k / compare share the RunConfig flags
  ConfigFlags run_flags, sweep_flags, compare_flags;

  auto* run = app.add_subcommand("run", "full pipeline: quantize, reference, embed, PCA, silhouette, plots");
  seed_option(run);
  run->add_option("--manifest", manifest, "sample manifest CSV")->required();
  add_run_flags(run, run_flags);

  auto* sweep = app.add_subcommand("sweep-k", "silhouette and wall-clock time as a function of K");
  seed_option(sweep);
  sweep->add_option("--manifest", manifest, "sample manifest CSV")->required();
  sweep->add_option("--ks", ks_text, "comma-separated K values")->required();
  sweep->add_option("--table", out, "output CSV (default: stdout)");
  add_run_flags(sweep, sweep_flags);

  auto* compare = app.add_subcommand("compare", "silhouette table for KME, Comp and LinW2 embeddings");
  seed_option(compare);
  compare->add_option("--manifest", manifest, "sample manifest CSV")->required();
  compare->add_option("--ks", ks_text, "comma-separated K values")->required();
  compare->add_option("--table", out, "output CSV (default: stdout)");
  add_run_flags(compare, compare_flags);

  Eigen::Index k = 64;
  auto* quantize = app.add_subcommand("quantize", "k-means quantization of the mean measure");
  seed_option(quantize);
  quantize->add_option("--manifest", manifest)->required();
  quantize->add_option("--k", k, "number of centers")->required();
  quantize->add_option("--out", out, "output directory for centers.csv and weights.csv")->required();

  std::string strategy = "barycenter", bary_weights = "fixed";
  int bary_iters = 100;
  auto* ref = app.add_subcommand("reference", "reference measure from a quantized ensemble");
  seed_option(ref);
  ref->add_option("--centers", centers)->required();
  ref->add_option("--weights", weights)->required();
  ref->add_option("--strategy", strategy, "barycenter, uniform_centers, random_sample or pair");
  ref->add_option("--barycenter-weights", bary_weights, "fixed or free");
  ref->add_option("--barycenter-iters", bary_iters);
  ref->add_option("--out", out, "reference CSV")->required();

  std::string method = "lot", inner = "weighted";
  double pseudo = 1e-6, sigma = 5.0;
  Eigen::Index kme_s = 0;
  auto* embed = app.add_subcommand("embed", "feature matrix for one embedding method");
  seed_option(embed);
  embed->add_option("--method", method, "lot, comp or kme");
  embed->add_option("--centers", centers, "centers CSV (lot)");
  embed->add_option("--weights", weights, "weights CSV (lot, comp)");
  embed->add_option("--reference", reference, "reference CSV (lot)");
  embed->add_option("--strategy", strategy, "strategy recorded with the reference (lot)");
  embed->add_option("--inner-product", inner, "weighted or plain (lot)");
  embed->add_option("--pseudo-count", pseudo, "CLR pseudo-count (comp)");
  embed->add_option("--manifest", manifest, "sample manifest (kme)");
  embed->add_option("--kme-s", kme_s, "feature count (kme)");
  embed->add_option("--kme-sigma", sigma, "kernel bandwidth (kme)");
  embed->add_option("--out", out, "features CSV")->required();

  Eigen::Index components = 3;
  auto* pca_cmd = app.add_subcommand("pca", "PCA scores of a feature matrix");
  seed_option(pca_cmd);
  pca_cmd->add_option("--features", features)->required();
  pca_cmd->add_option("--components", components);
  pca_cmd->add_option("--out", out, "scores CSV")->required();

  std::string label_key = "patient";
  auto* sil = app.add_subcommand("silhouette", "silhouette of a feature or score matrix under manifest labels");
  seed_option(sil);
  sil->add_option("--features", features)->required();
  sil->add_option("--manifest", manifest)->required();
  sil->add_option("--label-key", label_key);
  sil->add_option("--out", out, "report JSON (default: stdout)");

  auto* mst_cmd = app.add_subcommand("mst", "minimum spanning tree of the centers as DOT");
  seed_option(mst_cmd);
  mst_cmd->add_option("--centers", centers)->required();
  mst_cmd->add_option("--weights", weights, "weights CSV for per-sample node sizes");
  mst_cmd->add_option("--sample", sample, "sample id whose masses label the nodes");
  mst_cmd->add_option("--out", out, "DOT file (default: stdout)");

  double threshold = 0.02;
  auto* cls = app.add_subcommand("classify", "leave-one-out logistic regression on follow-up MRD status");
  seed_option(cls);
  cls->add_option("--features", features, "feature or PCA score CSV")->required();
  cls->add_option("--manifest", manifest)->required();
  cls->add_option("--mrd-threshold", threshold);
  cls->add_option("--out", out, "report JSON (default: stdout)");

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "write the synthetic multi-laboratory cohort");
  seed_option(synth);
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--patients", synth_opts.patients);
  synth->add_option("--replicates", synth_opts.replicates);
  synth->add_option("--labs", synth_opts.laboratories);
  synth->add_option("--cells", synth_opts.cells);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return stage("config", [&] {
      const RunConfig c = run_flags.resolve(seed);
      const Dataset data = [&] {
        try {
          return load_samples(manifest);
        } catch (const std::exception& e) {
          throw StageError("load", e.what());
        }
      }();
      const auto r = run_pipeline(data, c);
      std::cout << "wrote " << c.output_dir;
      if (r.silhouette)
        std::cout << "  silhouette raw=" << r.silhouette->raw.score << " pca=" << r.silhouette->pca.score;
      std::cout << "\n";
    });

  if (sweep->parsed() || compare->parsed()) {
    const bool is_sweep = sweep->parsed();
    return stage(is_sweep ? "sweep-k" : "compare", [&] {
      const RunConfig c = (is_sweep ? sweep_flags : compare_flags).resolve(seed);
      const auto ks = parse_ks(ks_text);
      const Dataset data = load_samples(manifest);
      std::string csv;
      if (is_sweep) {
        const auto rows = sweep_k(data, c, ks);
        for (const auto& r : rows)
          if (!r.error.empty()) std::cerr << "lotcyto: k=" << r.k << " failed: " << r.error << "\n";
        csv = sweep_csv(rows);
      } else {
        const auto rows = compare_methods(data, c, ks);
        for (const auto& r : rows)
          if (!r.error.empty()) std::cerr << "lotcyto: row " << r.label << " failed: " << r.error << "\n";
        csv = compare_csv(rows);
      }
      emit(out, csv);
    });
  }

  if (quantize->parsed())
    return stage("quantize", [&] {
      const Dataset data = load_samples(manifest);
      const auto q = quantize_ensemble(data.measures, k, seed);
      fs::create_directories(*out);
      write_csv(fs::path(*out) / "centers.csv", centers_table(q, data.markers), "center");
      write_csv(fs::path(*out) / "weights.csv", weights_table(q));
    });

  if (ref->parsed())
    return stage("reference", [&] {
      const Table ct = read_csv(centers, true);
      const auto q = ensemble_from_tables(ct, read_csv(weights, true));
      RunConfig c;
      c.set("barycenter_weights", bary_weights);
      c.barycenter_max_iterations = bary_iters;
      const auto r = make_reference(q, parse_reference_strategy(strategy), seed, reference_options(c));
      write_csv(*out, reference_table(r, ct.header), "measure");
    });

  if (embed->parsed())
    return stage("embed", [&] {
      const auto m = parse_embedding_method(method);
      Table t;
      if (m == EmbeddingMethod::kme) {
        if (manifest.empty()) throw InvalidInput("--manifest is required for kme");
        const Dataset data = load_samples(manifest);
        RunConfig c;
        c.kme_s = kme_s;
        const auto e = kme_embed(data.measures, c.effective_kme_s(static_cast<Eigen::Index>(data.markers.size())),
                                 sigma, seed);
        t = Table{numbered_columns("rff", e.s()), e.sample_ids, e.features};
      } else {
        if (weights.empty()) throw InvalidInput("--weights is required");
        const Table wt = read_csv(weights, true);
        if (m == EmbeddingMethod::comp) {
          Table ct;
          ct.values = Eigen::MatrixXd::Zero(wt.values.cols(), 1);
          const auto q = ensemble_from_tables(ct, wt);
          t = Table{numbered_columns("clr", q.k()), q.sample_ids, clr_transform(q, pseudo).clr_matrix};
        } else {
          if (centers.empty() || reference.empty()) throw InvalidInput("--centers and --reference are required for lot");
          const Table ct = read_csv(centers, true);
          const auto q = ensemble_from_tables(ct, wt);
          const auto r = reference_from_table(read_csv(reference, true), parse_reference_strategy(strategy));
          RunConfig c;
          c.set("inner_product", inner);
          const auto lot = embed_ensemble(q, r);
          t.values = as_feature_matrix(lot, c.inner_product);
          t.row_labels = q.sample_ids;
          for (Eigen::Index a = 0; a < lot.inner_weights.size(); ++a)
            for (const auto& name : ct.header) t.header.push_back("v" + std::to_string(a) + "_" + name);
        }
      }
      write_csv(*out, t);
    });

  if (pca_cmd->parsed())
    return stage("pca", [&] {
      const Table t = read_csv(features, true);
      write_csv(*out, pca_table(pca(t.values, components), t.row_labels));
    });

  if (sil->parsed())
    return stage("silhouette", [&] {
      const Table t = read_csv(features, true);
      const auto labels = labels_for(t, load_manifest(manifest), label_key);
      const auto s = silhouette(t.values, encode_labels(labels));
      const nlohmann::json j = {{"label_key", label_key},
                                {"labels", labels},
                                {"sample_ids", t.row_labels},
                                {"score", s.score},
                                {"per_point", s.per_point}};
      emit(out, j.dump(2) + "\n");
    });

  if (mst_cmd->parsed())
    return stage("mst", [&] {
      const Table ct = read_csv(centers, true);
      const Mst tree = mst(ct.values);
      std::optional<Weights> masses;
      if (!sample.empty()) {
        if (weights.empty()) throw InvalidInput("--sample needs --weights");
        const auto q = ensemble_from_tables(ct, read_csv(weights, true));
        const auto it = std::find(q.sample_ids.begin(), q.sample_ids.end(), sample);
        if (it == q.sample_ids.end()) throw InvalidInput("sample '" + sample + "' not in weights file");
        masses = mst_node_sizes(q, it - q.sample_ids.begin());
      }
      emit(out, mst_to_dot(tree, masses, sample.empty() ? "mst" : sample));
    });

  if (cls->parsed())
    return stage("classify", [&] {
      const Table t = read_csv(features, true);
      const SampleManifest m = load_manifest(manifest);
      const auto set = classification_set(m, threshold);
      std::map<std::string, Eigen::Index> row_of;
      for (std::size_t i = 0; i < t.row_labels.size(); ++i) row_of[t.row_labels[i]] = static_cast<Eigen::Index>(i);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(set.rows.size()), t.values.cols());
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < set.rows.size(); ++i) {
        const auto& id = m.entries[static_cast<std::size_t>(set.rows[i])].sample_id;
        const auto it = row_of.find(id);
        if (it == row_of.end()) throw InvalidInput("sample '" + id + "' missing from the feature file");
        x.row(static_cast<Eigen::Index>(i)) = t.values.row(it->second);
      }
      for (const auto& e : m.entries) ids.push_back(e.sample_id);
      const auto r = loo_logistic(x, set.labels);
      emit(out, classification_json(r, set, ids, threshold).dump(2) + "\n");
    });

  if (synth->parsed())
    return stage("synth", [&] {
      const auto path = write_dataset(make_synthetic(synth_opts, seed), *out);
      std::cout << "wrote " << path.string() << "\n";
    });

  return 0;
}
