#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lotcyto/baselines.hpp"
#include "lotcyto/io.hpp"
#include "lotcyto/kmeans.hpp"
#include "lotcyto/manifest.hpp"

namespace lotcyto {

/// Shape of the synthetic multi-centre cohort: every patient is a Gaussian
/// mixture over shared cell populations, and each (replicate, laboratory)
/// measurement of that patient adds small batch effects on top.
struct SynthOptions {
  int patients = 3;
  int replicates = 3;
  int laboratories = 7;
  int cells = 2000;
  int dim = 7;
  int populations = 8;
  double population_spread = 3.0;   // sd of the population means
  double population_width = 0.6;    // mean within-population sd
  double patient_shift = 0.6;       // sd of per-patient population mean shifts
  double patient_abundance = 0.6;   // sd of per-patient log-abundance changes
  double lab_shift = 0.3;           // sd of a laboratory's global translation
  double lab_scale = 0.05;          // sd of a laboratory's per-marker gain
  double replicate_abundance = 0.1; // sd of per-replicate log-abundance jitter
};

namespace detail {

class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : rng_(seed) {}
  double uniform() { return unit_uniform(rng_); }
  double normal() { return standard_normal(rng_); }
  std::size_t categorical(const std::vector<double>& cdf) {
    const double u = uniform() * cdf.back();
    std::size_t i = 0;
    while (i + 1 < cdf.size() && cdf[i] <= u) ++i;
    return i;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Generates the cohort in memory. Sample files are named
/// p<patient>_r<replicate>_l<lab>.csv relative to the (future) manifest.
inline Dataset make_synthetic(const SynthOptions& o, std::uint64_t seed) {
  if (o.patients < 1 || o.replicates < 1 || o.laboratories < 1 || o.cells < 1 || o.dim < 1 ||
      o.populations < 1)
    throw InvalidInput("synth: all counts must be positive");
  detail::SynthRng rng(seed);
  const int d = o.dim, m = o.populations;

  Eigen::MatrixXd means(m, d), widths(m, d);
  for (int j = 0; j < m; ++j)
    for (int c = 0; c < d; ++c) {
      means(j, c) = o.population_spread * rng.normal();
      widths(j, c) = o.population_width * (0.6 + 0.8 * rng.uniform());
    }

  std::vector<Eigen::MatrixXd> patient_means;
  std::vector<std::vector<double>> patient_logw;
  for (int p = 0; p < o.patients; ++p) {
    Eigen::MatrixXd pm = means;
    for (auto& v : pm.reshaped()) v += o.patient_shift * rng.normal();
    std::vector<double> lw(static_cast<std::size_t>(m));
    for (auto& v : lw) v = o.patient_abundance * rng.normal();
    patient_means.push_back(std::move(pm));
    patient_logw.push_back(std::move(lw));
  }

  std::vector<Eigen::RowVectorXd> lab_offset;
  std::vector<Eigen::RowVectorXd> lab_gain;
  for (int l = 0; l < o.laboratories; ++l) {
    Eigen::RowVectorXd off(d), gain(d);
    for (int c = 0; c < d; ++c) {
      off[c] = o.lab_shift * rng.normal();
      gain[c] = 1.0 + o.lab_scale * rng.normal();
    }
    lab_offset.push_back(off);
    lab_gain.push_back(gain);
  }

  Dataset ds;
  for (int c = 0; c < d; ++c) ds.markers.push_back("m" + std::to_string(c + 1));
  for (int p = 0; p < o.patients; ++p)
    for (int r = 0; r < o.replicates; ++r)
      for (int l = 0; l < o.laboratories; ++l) {
        std::vector<double> cdf(static_cast<std::size_t>(m));
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
          acc += std::exp(patient_logw[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)] +
                          o.replicate_abundance * rng.normal());
          cdf[static_cast<std::size_t>(j)] = acc;
        }
        Points x(o.cells, d);
        const auto& pm = patient_means[static_cast<std::size_t>(p)];
        for (int i = 0; i < o.cells; ++i) {
          const auto j = static_cast<Eigen::Index>(rng.categorical(cdf));
          for (int c = 0; c < d; ++c) {
            const double raw = pm(j, c) + widths(j, c) * rng.normal();
            x(i, c) = raw * lab_gain[static_cast<std::size_t>(l)][c] + lab_offset[static_cast<std::size_t>(l)][c];
          }
        }
        ManifestEntry e;
        e.patient = "P" + std::to_string(p + 1);
        e.replicate = "R" + std::to_string(r + 1);
        e.laboratory = "L" + std::to_string(l + 1);
        e.sample_id = e.patient + "_" + e.replicate + "_" + e.laboratory;
        e.file_path = "p" + std::to_string(p + 1) + "_r" + std::to_string(r + 1) + "_l" + std::to_string(l + 1) + ".csv";
        ds.manifest.entries.push_back(e);
        ds.measures.push_back(DiscreteMeasure::uniform(std::move(x), e.sample_id));
      }
  return ds;
}

/// Writes one CSV per sample plus manifest.csv into `dir`; returns the manifest path.
inline std::filesystem::path write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string manifest = "file,sample_id,patient,replicate,laboratory,kind,mrd_biom,mrd_flows\n";
  for (std::size_t i = 0; i < ds.measures.size(); ++i) {
    const auto& e = ds.manifest.entries[i];
    const auto name = e.file_path.filename();
    write_csv(dir / name, Table{ds.markers, {}, ds.measures[i].support()});
    const auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string{}; };
    manifest += name.string() + "," + e.sample_id + "," + e.patient + "," + e.replicate + "," + e.laboratory +
                "," + (e.kind ? to_string(*e.kind) : std::string{}) + "," + opt(e.mrd_biom) + "," +
                opt(e.mrd_flows) + "\n";
  }
  const auto path = dir / "manifest.csv";
  io::write_text(path, manifest);
  return path;
}

}  // namespace lotcyto
