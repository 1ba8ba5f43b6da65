#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <cstdint>
#include <string>
#include <vector>

#include "lotcyto/barycenter.hpp"
#include "lotcyto/io.hpp"
#include "lotcyto/lot.hpp"

namespace lotcyto {

enum class EmbeddingMethod { lot, comp, kme };

inline std::string to_string(EmbeddingMethod m) {
  switch (m) {
    case EmbeddingMethod::lot: return "lot";
    case EmbeddingMethod::comp: return "comp";
    case EmbeddingMethod::kme: return "kme";
  }
  return "?";
}

inline EmbeddingMethod parse_embedding_method(std::string_view s) {
  if (s == "lot" || s == "linw2") return EmbeddingMethod::lot;
  if (s == "comp") return EmbeddingMethod::comp;
  if (s == "kme") return EmbeddingMethod::kme;
  throw InvalidInput("unknown embedding method '" + std::string(s) + "' (lot, comp, kme)");
}

/// Every knob of a pipeline run. The text form is one `key = value` per line
/// in the order of `RunConfig::keys()`; doubles use the shortest exact decimal.
struct RunConfig {
  Eigen::Index k = 64;
  std::uint64_t seed = 0;
  EmbeddingMethod embedding_method = EmbeddingMethod::lot;
  ReferenceStrategy reference_strategy = ReferenceStrategy::barycenter;
  BarycenterWeights barycenter_weights = BarycenterWeights::fixed_uniform;
  int barycenter_max_iterations = 100;
  InnerProduct inner_product = InnerProduct::weighted;
  Eigen::Index pca_components = 3;
  Eigen::Index plot_components = 2;
  Eigen::Index kme_s = 0;        // 0: K * d
  double kme_sigma = 5.0;
  double pseudo_count = 1e-6;
  std::string label_key = "patient";
  double mrd_threshold = 0.02;   // percent; follow-ups above it are positive
  bool classify = false;
  bool mst = false;
  std::string output_dir = "out";

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{
        "k",           "seed",          "embedding_method", "reference_strategy",
        "barycenter_weights", "barycenter_max_iterations", "inner_product", "pca_components",
        "plot_components", "kme_s",     "kme_sigma",        "pseudo_count",
        "label_key",   "mrd_threshold", "classify",         "mst",
        "output_dir"};
    return k;
  }

  std::string get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void validate() const;

  /// Feature count for KME; the default matches the LOT dimension K*d, rounded up to even.
  Eigen::Index effective_kme_s(Eigen::Index d) const {
    if (kme_s > 0) return kme_s;
    return k * d + (k * d) % 2;
  }
};

namespace detail {

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw InvalidInput("config: " + key + " must be an integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  double out;
  if (!io::parse_double(v, out) || !std::isfinite(out))
    throw InvalidInput("config: " + key + " must be a finite number, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config: " + key + " must be true or false, got '" + v + "'");
}

}  // namespace detail

inline std::string RunConfig::get(const std::string& key) const {
  if (key == "k") return std::to_string(k);
  if (key == "seed") return std::to_string(seed);
  if (key == "embedding_method") return to_string(embedding_method);
  if (key == "reference_strategy") return std::string(to_string(reference_strategy));
  if (key == "barycenter_weights")
    return barycenter_weights == BarycenterWeights::free ? "free" : "fixed";
  if (key == "barycenter_max_iterations") return std::to_string(barycenter_max_iterations);
  if (key == "inner_product") return inner_product == InnerProduct::plain ? "plain" : "weighted";
  if (key == "pca_components") return std::to_string(pca_components);
  if (key == "plot_components") return std::to_string(plot_components);
  if (key == "kme_s") return std::to_string(kme_s);
  if (key == "kme_sigma") return io::format_double(kme_sigma);
  if (key == "pseudo_count") return io::format_double(pseudo_count);
  if (key == "label_key") return label_key;
  if (key == "mrd_threshold") return io::format_double(mrd_threshold);
  if (key == "classify") return classify ? "true" : "false";
  if (key == "mst") return mst ? "true" : "false";
  if (key == "output_dir") return output_dir;
  throw InvalidInput("config: unknown key '" + key + "'");
}

inline void RunConfig::set(const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "k") k = parse_int(key, v);
  else if (key == "seed") {
    const auto s = parse_int(key, v);
    if (s < 0) throw InvalidInput("config: seed must be nonnegative");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "embedding_method") embedding_method = parse_embedding_method(v);
  else if (key == "reference_strategy") reference_strategy = parse_reference_strategy(v);
  else if (key == "barycenter_weights") {
    if (v == "fixed") barycenter_weights = BarycenterWeights::fixed_uniform;
    else if (v == "free") barycenter_weights = BarycenterWeights::free;
    else throw InvalidInput("config: barycenter_weights must be fixed or free, got '" + v + "'");
  } else if (key == "barycenter_max_iterations") barycenter_max_iterations = static_cast<int>(parse_int(key, v));
  else if (key == "inner_product") {
    if (v == "weighted") inner_product = InnerProduct::weighted;
    else if (v == "plain") inner_product = InnerProduct::plain;
    else throw InvalidInput("config: inner_product must be weighted or plain, got '" + v + "'");
  } else if (key == "pca_components") pca_components = parse_int(key, v);
  else if (key == "plot_components") plot_components = parse_int(key, v);
  else if (key == "kme_s") kme_s = parse_int(key, v);
  else if (key == "kme_sigma") kme_sigma = parse_real(key, v);
  else if (key == "pseudo_count") pseudo_count = parse_real(key, v);
  else if (key == "label_key") label_key = v;
  else if (key == "mrd_threshold") mrd_threshold = parse_real(key, v);
  else if (key == "classify") classify = parse_bool(key, v);
  else if (key == "mst") mst = parse_bool(key, v);
  else if (key == "output_dir") output_dir = v;
  else throw InvalidInput("config: unknown key '" + key + "'");
}

inline void RunConfig::validate() const {
  const auto fail = [](const std::string& what) { throw InvalidInput("config: " + what); };
  if (k < 1) fail("k must be >= 1");
  if (barycenter_max_iterations < 1) fail("barycenter_max_iterations must be >= 1");
  if (pca_components < 1) fail("pca_components must be >= 1");
  if (plot_components < 1 || plot_components > 3) fail("plot_components must be 1, 2 or 3");
  if (kme_s < 0 || kme_s % 2 != 0) fail("kme_s must be 0 or a positive even number");
  if (!(kme_sigma > 0.0)) fail("kme_sigma must be positive");
  if (!(pseudo_count > 0.0)) fail("pseudo_count must be positive");
  if (label_key != "patient" && label_key != "replicate" && label_key != "laboratory" &&
      label_key != "kind")
    fail("label_key must be patient, replicate, laboratory or kind");
  if (!(mrd_threshold >= 0.0)) fail("mrd_threshold must be nonnegative");
  if (output_dir.empty()) fail("output_dir must not be empty");
}

inline std::string to_text(const RunConfig& c) {
  std::string out;
  for (const auto& key : RunConfig::keys()) out += key + " = " + c.get(key) + "\n";
  return out;
}

/// Parses the text form. Blank lines and '#' comments are ignored; keys may
/// appear in any order and missing keys keep their defaults.
inline RunConfig parse_config(std::string_view text, const std::string& source = "config") {
  RunConfig c;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const auto line = io::trim(text.substr(pos, end == std::string_view::npos ? end : end - pos));
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidInput(source + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      c.set(std::string(io::trim(line.substr(0, eq))), std::string(io::trim(line.substr(eq + 1))));
    } catch (const InvalidInput& e) {
      throw InvalidInput(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_text(path), path.string());
}

}  // namespace lotcyto
