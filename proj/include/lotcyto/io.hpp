#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "lotcyto/measure.hpp"

namespace lotcyto {

/// Raised for malformed or unreadable input files. The message carries the
/// path and, where it applies, the 1-based line number.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

inline std::string location(const std::filesystem::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

/// Splits one CSV line on commas. Quoting is not supported: cytometry exports
/// and the files written here never need it.
inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view text, double& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace io

/// A numeric table with named columns and optional row labels.
struct Table {
  std::vector<std::string> header;     // column names, excluding the row-label column
  std::vector<std::string> row_labels; // empty when the file has none
  Eigen::MatrixXd values;
};

/// Reads a headed numeric CSV. With `label_column` set, the first column holds
/// free-text row labels. Blank lines are skipped.
inline Table read_csv(const std::filesystem::path& path, bool label_column = false) {
  const std::string text = io::read_text(path);
  Table t;
  std::vector<double> data;
  std::size_t line_no = 0, rows = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line(text.data() + pos, (end == std::string::npos ? text.size() : end) - pos);
    pos = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (io::trim(line).empty()) continue;
    auto cells = io::split(line);
    if (!have_header) {
      if (label_column) cells.erase(cells.begin());
      for (const auto& c : cells)
        if (c.empty()) throw IoError(io::location(path, line_no) + ": empty column name in header");
      t.header = std::move(cells);
      if (t.header.empty()) throw IoError(io::location(path, line_no) + ": header has no data columns");
      have_header = true;
      continue;
    }
    const std::size_t expected = t.header.size() + (label_column ? 1 : 0);
    if (cells.size() != expected)
      throw IoError(io::location(path, line_no) + ": expected " + std::to_string(expected) +
                    " fields, found " + std::to_string(cells.size()));
    std::size_t first = 0;
    if (label_column) {
      t.row_labels.push_back(cells[0]);
      first = 1;
    }
    for (std::size_t c = first; c < cells.size(); ++c) {
      double v;
      if (!io::parse_double(cells[c], v))
        throw IoError(io::location(path, line_no) + ": column '" + t.header[c - first] +
                      "' is not a number: '" + cells[c] + "'");
      data.push_back(v);
    }
    ++rows;
  }
  if (!have_header) throw IoError(path.string() + ": file is empty");
  t.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(t.header.size()));
  return t;
}

inline std::string to_csv(const Table& t, std::string_view label_name = "sample_id") {
  const bool labels = !t.row_labels.empty();
  if (labels && static_cast<Eigen::Index>(t.row_labels.size()) != t.values.rows())
    throw InvalidInput("to_csv: row label count does not match the matrix");
  if (static_cast<Eigen::Index>(t.header.size()) != t.values.cols())
    throw InvalidInput("to_csv: header width does not match the matrix");
  std::string out;
  if (labels) {
    out += label_name;
    if (!t.header.empty()) out += ',';
  }
  out += io::join(t.header);
  out += '\n';
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    if (labels) {
      out += t.row_labels[static_cast<std::size_t>(r)];
      if (t.values.cols()) out += ',';
    }
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
      if (c) out += ',';
      out += io::format_double(t.values(r, c));
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const Table& t,
                      std::string_view label_name = "sample_id") {
  io::write_text(path, to_csv(t, label_name));
}

inline std::vector<std::string> numbered_columns(std::string_view prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

}  // namespace lotcyto
