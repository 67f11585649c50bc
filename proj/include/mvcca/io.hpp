/*
 * mvcca: probabilistic canonical correlation analysis for matrix data.
 *
 * Copyright 2026 The mvcca authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <Eigen/Core>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvcca/dataset.hpp"
#include "mvcca/errors.hpp"
#include "mvcca/trace.hpp"

namespace mvcca {

// ---------------------------------------------------------------------------
// Low-level file helpers.
// ---------------------------------------------------------------------------

/// Write-temp-then-rename so consumers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw StructuralError("cannot open for writing: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw StructuralError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StructuralError("rename failed for " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV matrices: one row per line, comma separated decimal reals.
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size())
          throw StructuralError("malformed number '" + cell + "' in " + path.string());
      } catch (const std::invalid_argument&) {
        throw StructuralError("malformed number '" + cell + "' in " + path.string());
      } catch (const std::out_of_range&) {
        throw StructuralError("number out of range '" + cell + "' in " + path.string());
      }
    }
    if (!rows.empty() && row.size() != rows[0].size())
      throw StructuralError("ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows[0].empty()) throw StructuralError("empty matrix in " + path.string());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// 8-bit binary PGM (P5, maxval 255), mapped to [0, 1].
// ---------------------------------------------------------------------------

namespace detail {

// Next whitespace-delimited token, skipping '#' comment lines.
inline std::string pgm_token(const std::string& text, std::size_t& pos,
                             const std::string& file) {
  while (pos < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    } else if (text[pos] == '#') {
      while (pos < text.size() && text[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  if (start == pos) throw StructuralError("malformed PGM header in " + file);
  return text.substr(start, pos - start);
}

}  // namespace detail

inline Eigen::MatrixXd read_pgm8(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::size_t pos = 0;
  if (detail::pgm_token(text, pos, path.string()) != "P5")
    throw StructuralError("not a binary PGM (P5) file: " + path.string());
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(detail::pgm_token(text, pos, path.string()));
    height = std::stoi(detail::pgm_token(text, pos, path.string()));
    maxval = std::stoi(detail::pgm_token(text, pos, path.string()));
  } catch (const std::exception&) {
    throw StructuralError("malformed PGM header in " + path.string());
  }
  if (width <= 0 || height <= 0)
    throw StructuralError("malformed PGM dimensions in " + path.string());
  if (maxval != 255)
    throw StructuralError("unsupported PGM maxval (expected 255) in " + path.string());
  ++pos;  // single whitespace after maxval
  const std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (text.size() - pos < expected)
    throw StructuralError("truncated PGM pixel data in " + path.string());
  Eigen::MatrixXd m(height, width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j)
      m(i, j) = static_cast<unsigned char>(text[pos + static_cast<std::size_t>(i) * width + j]) / 255.0;
  return m;
}

inline void write_pgm8(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = std::clamp(m(i, j), 0.0, 1.0);
      out += static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// Dataset manifest: JSON index of paired matrix files.
// ---------------------------------------------------------------------------

inline constexpr int k_manifest_version = 1;

struct ManifestPair {
  std::string id;
  std::string view1;
  std::string view2;
  std::string label;
};

struct DatasetManifest {
  int format_version = k_manifest_version;
  std::string matrix_format = "csv";  // "csv" or "pgm8"
  std::vector<ManifestPair> pairs;
};

inline DatasetManifest parse_manifest(const std::string& text, const std::string& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("invalid JSON in " + file + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != k_manifest_version)
      throw StructuralError("unsupported manifest format_version " +
                            std::to_string(m.format_version) + " in " + file);
    m.matrix_format = j.at("matrix_format").get<std::string>();
    if (m.matrix_format != "csv" && m.matrix_format != "pgm8")
      throw StructuralError("unsupported matrix_format '" + m.matrix_format + "' in " + file);
    for (const auto& p : j.at("pairs")) {
      ManifestPair pair;
      pair.id = p.at("id").get<std::string>();
      pair.view1 = p.at("view1").get<std::string>();
      pair.view2 = p.at("view2").get<std::string>();
      pair.label = p.value("label", "");
      m.pairs.push_back(std::move(pair));
    }
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("malformed manifest " + file + ": " + e.what());
  }
  for (std::size_t i = 0; i < m.pairs.size(); ++i)
    for (std::size_t k = i + 1; k < m.pairs.size(); ++k)
      if (m.pairs[i].id == m.pairs[k].id)
        throw StructuralError("duplicate pair id '" + m.pairs[i].id + "' in " + file);
  return m;
}

inline void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["matrix_format"] = m.matrix_format;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : m.pairs) {
    nlohmann::json jp;
    jp["id"] = p.id;
    jp["view1"] = p.view1;
    jp["view2"] = p.view2;
    if (!p.label.empty()) jp["label"] = p.label;
    j["pairs"].push_back(std::move(jp));
  }
  atomic_write_file(path, j.dump(2) + "\n");
}

/// Load the paired dataset a manifest describes. Relative file paths resolve
/// against the manifest's directory; pgm8 pixels map to [0, 1].
inline PairedMatrixDataset load_dataset(const std::filesystem::path& manifest_path) {
  const DatasetManifest manifest =
      parse_manifest(read_file(manifest_path), manifest_path.string());
  require(!manifest.pairs.empty(), "manifest has no pairs: " + manifest_path.string());
  const std::filesystem::path base = manifest_path.parent_path();
  std::vector<Eigen::MatrixXd> view1, view2;
  std::vector<std::string> ids, labels;
  bool any_label = false;
  for (const auto& p : manifest.pairs) {
    for (const auto* side : {&p.view1, &p.view2}) {
      const std::filesystem::path f = base / *side;
      if (!std::filesystem::exists(f))
        throw StructuralError("missing matrix file: " + f.string());
    }
    auto load = [&](const std::string& rel) {
      const std::filesystem::path f = base / rel;
      return manifest.matrix_format == "pgm8" ? read_pgm8(f) : read_csv_matrix(f);
    };
    view1.push_back(load(p.view1));
    view2.push_back(load(p.view2));
    ids.push_back(p.id);
    labels.push_back(p.label);
    if (!p.label.empty()) any_label = true;
  }
  for (std::size_t i = 1; i < view1.size(); ++i) {
    if (view1[i].rows() != view1[0].rows() || view1[i].cols() != view1[0].cols())
      throw StructuralError("view1 dimensions of pair '" + manifest.pairs[i].id +
                            "' differ from pair '" + manifest.pairs[0].id + "'");
    if (view2[i].rows() != view2[0].rows() || view2[i].cols() != view2[0].cols())
      throw StructuralError("view2 dimensions of pair '" + manifest.pairs[i].id +
                            "' differ from pair '" + manifest.pairs[0].id + "'");
  }
  if (!any_label) labels.clear();
  return make_paired_dataset(std::move(view1), std::move(view2), std::move(labels),
                             std::move(ids));
}

// ---------------------------------------------------------------------------
// Model archive: versioned JSON with named matrices.
// ---------------------------------------------------------------------------

inline constexpr int k_archive_version = 1;

struct ModelArchive {
  int format_version = k_archive_version;
  std::string model_kind;
  std::map<std::string, Eigen::MatrixXd> matrices;
  nlohmann::json scalars = nlohmann::json::object();
  nlohmann::json fit = nlohmann::json::object();

  const Eigen::MatrixXd& matrix(const std::string& name) const {
    auto it = matrices.find(name);
    if (it == matrices.end())
      throw StructuralError("model archive is missing matrix '" + name + "'");
    return it->second;
  }
};

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    data.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& name) {
  try {
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw StructuralError("negative dimensions for matrix '" + name + "'");
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows)
      throw StructuralError("row count mismatch for matrix '" + name + "'");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& row = data.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != cols)
        throw StructuralError("column count mismatch for matrix '" + name + "'");
      for (Eigen::Index jc = 0; jc < cols; ++jc)
        m(i, jc) = row.at(static_cast<std::size_t>(jc)).get<double>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("malformed matrix '" + name + "': " + e.what());
  }
}

inline void save_model(const std::filesystem::path& path, const ModelArchive& archive) {
  nlohmann::json j;
  j["format_version"] = archive.format_version;
  j["model_kind"] = archive.model_kind;
  j["scalars"] = archive.scalars;
  j["fit"] = archive.fit;
  nlohmann::json mats = nlohmann::json::object();
  for (const auto& [name, m] : archive.matrices) mats[name] = matrix_to_json(m);
  j["matrices"] = std::move(mats);
  atomic_write_file(path, j.dump(2) + "\n");
}

inline ModelArchive load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("invalid JSON in " + path.string() + ": " + e.what());
  }
  ModelArchive archive;
  try {
    archive.format_version = j.at("format_version").get<int>();
    if (archive.format_version != k_archive_version)
      throw StructuralError("unsupported model archive format_version " +
                            std::to_string(archive.format_version) + " in " + path.string());
    archive.model_kind = j.at("model_kind").get<std::string>();
    archive.scalars = j.value("scalars", nlohmann::json::object());
    archive.fit = j.value("fit", nlohmann::json::object());
    for (const auto& [name, jm] : j.at("matrices").items())
      archive.matrices[name] = matrix_from_json(jm, name);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("malformed model archive " + path.string() + ": " + e.what());
  }
  return archive;
}

// ---------------------------------------------------------------------------
// Fit traces (CSV) and evaluation metrics (JSON).
// ---------------------------------------------------------------------------

inline void write_trace_csv(const std::filesystem::path& path, const FitTrace& trace) {
  std::string out = "iteration,objective";
  if (!trace.rows.empty())
    for (const auto& [name, value] : trace.rows[0].deltas) out += "," + name;
  out += '\n';
  for (const auto& row : trace.rows) {
    out += std::to_string(row.iteration) + "," + format_double(row.objective);
    for (const auto& [name, value] : row.deltas) out += "," + format_double(value);
    out += '\n';
  }
  atomic_write_file(path, out);
}

inline FitTrace read_trace_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line)) throw StructuralError("empty trace file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "iteration" || header[1] != "objective")
    throw StructuralError("unexpected trace header in " + path.string());
  FitTrace trace;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> fields;
    while (std::getline(cells, cell, ',')) fields.push_back(cell);
    if (fields.size() != header.size())
      throw StructuralError("ragged trace row in " + path.string());
    TraceRow row;
    try {
      row.iteration = std::stoi(fields[0]);
      row.objective = std::stod(fields[1]);
      for (std::size_t i = 2; i < fields.size(); ++i)
        row.deltas.emplace_back(header[i], std::stod(fields[i]));
    } catch (const std::exception&) {
      throw StructuralError("malformed trace row in " + path.string());
    }
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

struct EvalMetrics {
  std::string criterion;
  int n_total = 0;
  int n_errors = 0;
  int feature_count = 0;
  std::map<std::string, std::pair<int, int>> per_class;  // label -> {total, errors}

  double error_rate() const { return n_total ? static_cast<double>(n_errors) / n_total : 0.0; }
};

inline void write_metrics_json(const std::filesystem::path& path, const EvalMetrics& m) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["criterion"] = m.criterion;
  j["error_rate"] = m.error_rate();
  j["n_total"] = m.n_total;
  j["n_errors"] = m.n_errors;
  j["feature_count"] = m.feature_count;
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, counts] : m.per_class)
    per_class[label] = {{"total", counts.first}, {"errors", counts.second}};
  j["per_class"] = std::move(per_class);
  atomic_write_file(path, j.dump(2) + "\n");
}

inline EvalMetrics read_metrics_json(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("invalid JSON in " + path.string() + ": " + e.what());
  }
  EvalMetrics m;
  try {
    m.criterion = j.at("criterion").get<std::string>();
    m.n_total = j.at("n_total").get<int>();
    m.n_errors = j.at("n_errors").get<int>();
    m.feature_count = j.value("feature_count", 0);
    for (const auto& [label, counts] : j.at("per_class").items())
      m.per_class[label] = {counts.at("total").get<int>(), counts.at("errors").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("malformed metrics " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace mvcca
