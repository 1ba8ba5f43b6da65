#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lotcyto/io.hpp"
#include "lotcyto/measure.hpp"

namespace lotcyto {

enum class SampleKind { diagnosis, followup, nbm };

inline std::string to_string(SampleKind k) {
  switch (k) {
    case SampleKind::diagnosis: return "diagnosis";
    case SampleKind::followup: return "followup";
    case SampleKind::nbm: return "nbm";
  }
  return "?";
}

struct ManifestEntry {
  std::filesystem::path file_path;  // resolved against the manifest directory
  std::string sample_id;
  std::string patient;
  std::string replicate;
  std::string laboratory;
  std::optional<SampleKind> kind;
  std::optional<double> mrd_biom;   // percent
  std::optional<double> mrd_flows;
};

/// Parsed sample manifest.
///
/// The manifest is a CSV file with a header. `file` and `sample_id` are
/// required columns; `patient`, `replicate`, `laboratory`, `kind`, `mrd_biom`
/// and `mrd_flows` are optional and may be left blank per row. Two directive
/// lines may precede the header:
///
///   # rename: FL1-A=CD4, FL2-A=CD8     raw column name -> marker name
///   # markers: CD4, CD8, CD3           columns to keep, in this order
///
/// Other lines starting with '#' are comments.
struct SampleManifest {
  std::filesystem::path path;
  std::vector<ManifestEntry> entries;
  std::map<std::string, std::string> rename;
  std::vector<std::string> markers;  // empty: keep every column

  std::size_t size() const noexcept { return entries.size(); }

  /// Label vector for the given manifest field (patient, replicate, laboratory, kind).
  std::vector<std::string> labels(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
      if (key == "patient") out.push_back(e.patient);
      else if (key == "replicate") out.push_back(e.replicate);
      else if (key == "laboratory") out.push_back(e.laboratory);
      else if (key == "kind") out.push_back(e.kind ? to_string(*e.kind) : std::string{});
      else throw InvalidInput("unknown label key '" + key + "'");
    }
    return out;
  }

  /// True when every entry carries a nonempty value for `key`.
  bool has_labels(const std::string& key) const {
    const auto l = labels(key);
    return !l.empty() && std::none_of(l.begin(), l.end(), [](const std::string& s) { return s.empty(); });
  }
};

namespace detail {

inline std::string_view after_directive(std::string_view line, std::string_view name) {
  line = io::trim(line.substr(1));
  if (line.substr(0, name.size()) != name) return {};
  line.remove_prefix(name.size());
  line = io::trim(line);
  if (line.empty() || line.front() != ':') return {};
  return io::trim(line.substr(1));
}

inline std::optional<double> parse_mrd(const std::string& cell, const std::filesystem::path& file,
                                       std::size_t line, const char* column) {
  if (cell.empty()) return std::nullopt;
  double v;
  if (!io::parse_double(cell, v) || !std::isfinite(v) || v < 0.0)
    throw IoError(io::location(file, line) + ": " + column + " must be a nonnegative number, got '" +
                  cell + "'");
  return v;
}

}  // namespace detail

inline SampleManifest load_manifest(const std::filesystem::path& manifest_path) {
  static const std::set<std::string> known{"file", "sample_id", "patient", "replicate",
                                           "laboratory", "kind", "mrd_biom", "mrd_flows"};
  const std::string text = io::read_text(manifest_path);
  SampleManifest m;
  m.path = manifest_path;
  const auto base = manifest_path.parent_path();

  std::map<std::string, std::size_t> column;
  std::set<std::string> seen_ids;
  std::size_t line_no = 0;
  std::istringstream in(text);
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string_view line = io::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (auto spec = detail::after_directive(line, "rename"); !spec.empty()) {
        for (const auto& pair : io::split(spec)) {
          const auto eq = pair.find('=');
          if (eq == std::string::npos)
            throw IoError(io::location(manifest_path, line_no) + ": rename entry '" + pair +
                          "' is not of the form raw=marker");
          m.rename[std::string(io::trim(std::string_view(pair).substr(0, eq)))] =
              std::string(io::trim(std::string_view(pair).substr(eq + 1)));
        }
      } else if (auto list = detail::after_directive(line, "markers"); !list.empty()) {
        m.markers = io::split(list);
      }
      continue;
    }
    auto cells = io::split(line);
    if (column.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!known.count(cells[i]))
          throw IoError(io::location(manifest_path, line_no) + ": unknown manifest column '" +
                        cells[i] + "'");
        if (!column.emplace(cells[i], i).second)
          throw IoError(io::location(manifest_path, line_no) + ": duplicate column '" + cells[i] + "'");
      }
      for (const char* req : {"file", "sample_id"})
        if (!column.count(req))
          throw IoError(io::location(manifest_path, line_no) + ": missing required column '" + req + "'");
      continue;
    }
    if (cells.size() != column.size())
      throw IoError(io::location(manifest_path, line_no) + ": expected " +
                    std::to_string(column.size()) + " fields, found " + std::to_string(cells.size()));
    const auto get = [&](const char* name) -> std::string {
      const auto it = column.find(name);
      return it == column.end() ? std::string{} : cells[it->second];
    };

    ManifestEntry e;
    const std::string file = get("file");
    if (file.empty()) throw IoError(io::location(manifest_path, line_no) + ": empty file path");
    e.file_path = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : base / file;
    e.sample_id = get("sample_id");
    if (e.sample_id.empty()) throw IoError(io::location(manifest_path, line_no) + ": empty sample_id");
    if (!seen_ids.insert(e.sample_id).second)
      throw IoError(io::location(manifest_path, line_no) + ": duplicate sample_id '" + e.sample_id + "'");
    e.patient = get("patient");
    e.replicate = get("replicate");
    e.laboratory = get("laboratory");
    if (const auto kind = get("kind"); !kind.empty()) {
      if (kind == "diagnosis") e.kind = SampleKind::diagnosis;
      else if (kind == "followup") e.kind = SampleKind::followup;
      else if (kind == "nbm") e.kind = SampleKind::nbm;
      else
        throw IoError(io::location(manifest_path, line_no) + ": kind must be diagnosis, followup or nbm, got '" +
                      kind + "'");
    }
    e.mrd_biom = detail::parse_mrd(get("mrd_biom"), manifest_path, line_no, "mrd_biom");
    e.mrd_flows = detail::parse_mrd(get("mrd_flows"), manifest_path, line_no, "mrd_flows");
    m.entries.push_back(std::move(e));
  }
  if (column.empty()) throw IoError(manifest_path.string() + ": manifest has no header");
  if (m.entries.empty()) throw IoError(manifest_path.string() + ": manifest lists no samples");
  return m;
}

struct Dataset {
  SampleManifest manifest;
  std::vector<std::string> markers;
  std::vector<DiscreteMeasure> measures;  // one per manifest entry, same order
};

/// Reads one cytometry CSV into a uniform measure on `markers` (after renaming).
/// With `markers` empty the file's own header is used and returned through it.
inline DiscreteMeasure load_sample_csv(const ManifestEntry& entry,
                                       const std::map<std::string, std::string>& rename,
                                       std::vector<std::string>& markers, bool select) {
  if (!std::filesystem::exists(entry.file_path))
    throw IoError(entry.file_path.string() + ": sample file not found (sample '" + entry.sample_id + "')");
  Table t = read_csv(entry.file_path);
  for (auto& name : t.header)
    if (auto it = rename.find(name); it != rename.end()) name = it->second;
  if (t.values.rows() == 0) throw IoError(entry.file_path.string() + ": no cells");

  if (select) {
    Points x(t.values.rows(), static_cast<Eigen::Index>(markers.size()));
    for (std::size_t c = 0; c < markers.size(); ++c) {
      const auto it = std::find(t.header.begin(), t.header.end(), markers[c]);
      if (it == t.header.end())
        throw IoError(entry.file_path.string() + ": marker column '" + markers[c] + "' missing");
      x.col(static_cast<Eigen::Index>(c)) = t.values.col(it - t.header.begin());
    }
    return DiscreteMeasure::uniform(std::move(x), entry.sample_id);
  }
  if (markers.empty()) {
    markers = t.header;
  } else if (t.header != markers) {
    throw IoError(entry.file_path.string() + ":1: marker header (" + io::join(t.header) +
                  ") differs from the first file (" + io::join(markers) + ")");
  }
  return DiscreteMeasure::uniform(Points(t.values), entry.sample_id);
}

inline Dataset load_samples(const std::filesystem::path& manifest_path) {
  Dataset ds;
  ds.manifest = load_manifest(manifest_path);
  const bool select = !ds.manifest.markers.empty();
  ds.markers = ds.manifest.markers;
  for (const auto& e : ds.manifest.entries) {
    try {
      ds.measures.push_back(load_sample_csv(e, ds.manifest.rename, ds.markers, select));
    } catch (const InvalidInput& err) {
      throw IoError(e.file_path.string() + ": " + err.what());
    }
  }
  return ds;
}

}  // namespace lotcyto
