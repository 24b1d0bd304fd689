#pragma once

// File formats: measure JSON, image grids (CSV rows or PGM P2), GMM specs,
// custom cost files, weight-matrix CSV and tree JSON.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msbtree/error.hpp"
#include "msbtree/graph.hpp"
#include "msbtree/matrix.hpp"
#include "msbtree/measures.hpp"
#include "msbtree/mst.hpp"
#include "msbtree/trees.hpp"

namespace msbtree::io {

using nlohmann::json;

/// 15 significant digits, the precision used for every reported cost.
inline std::string format15(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

inline double round15(double x) { return std::isfinite(x) ? std::stod(format15(x)) : x; }

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("error while writing " + path.string());
}

inline json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ": invalid JSON: " + e.what());
  }
}

// {"support": [[x1, ..., xd], ...], "weights": [w1, ...]}. Weights are
// normalized on load; a bare number is accepted as a 1-d point.
inline DiscreteMeasure measure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("support") || !j.contains("weights"))
    throw ValidationError("measure must be an object with \"support\" and \"weights\"");
  try {
    std::vector<Point> support;
    for (const auto& p : j.at("support")) {
      if (p.is_number())
        support.push_back({p.get<double>()});
      else
        support.push_back(p.get<std::vector<double>>());
    }
    const auto weights = j.at("weights").get<std::vector<double>>();
    if (support.size() != weights.size())
      throw ValidationError("support length " + std::to_string(support.size()) + " differs from weights length " +
                            std::to_string(weights.size()));
    return DiscreteMeasure::from_masses(std::move(support), weights);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed measure: ") + e.what());
  }
}

inline json measure_to_json(const DiscreteMeasure& m) {
  json support = json::array();
  for (const auto& p : m.support()) support.push_back(p);
  return {{"support", support}, {"weights", std::vector<double>(m.weights().begin(), m.weights().end())}};
}

/// Plain numeric grid, one row per line, comma or whitespace separated.
inline Matrix<double> parse_csv_grid(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t' || c == '\r') c = ' ';
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ValidationError("grid row " + std::to_string(rows.size() + 1) + ": '" + tok + "' is not a number");
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError("grid row " + std::to_string(rows.size() + 1) + " has " + std::to_string(row.size()) +
                            " values, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("grid is empty");
  Matrix<double> m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

/// ASCII PGM (P2). Comments introduced by '#' run to end of line.
inline Matrix<double> parse_pgm(const std::string& text) {
  std::string cleaned;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    cleaned += line.substr(0, hash) + '\n';
  }
  std::istringstream in(cleaned);
  std::string magic;
  long long w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P2") throw ValidationError("PGM must be ASCII P2, got '" + magic + "'");
  if (!in || w <= 0 || h <= 0 || maxval <= 0) throw ValidationError("PGM header is malformed");
  Matrix<double> m(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
  for (auto& px : m.data()) {
    long long v = 0;
    if (!(in >> v)) throw ValidationError("PGM has fewer pixels than its header declares");
    if (v < 0 || v > maxval) throw ValidationError("PGM pixel value " + std::to_string(v) + " out of range");
    px = static_cast<double>(v);
  }
  return m;
}

/// Loads a measure by extension: .csv / .txt grid or .pgm image, JSON otherwise.
inline DiscreteMeasure read_measure_file(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const std::string ext = path.extension().string();
  try {
    if (ext == ".csv" || ext == ".txt") return image_to_measure(parse_csv_grid(text));
    if (ext == ".pgm") return image_to_measure(parse_pgm(text));
    return measure_from_json(parse_json(text, path.string()));
  } catch (const CapacityError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void write_measure_file(const std::filesystem::path& path, const DiscreteMeasure& m) {
  write_text(path, measure_to_json(m).dump() + "\n");
}

struct GmmSpec {
  Interval interval{};
  std::size_t n = 25;
  std::vector<std::vector<GmmComponent>> mixtures;
};

// {"interval": [a, b], "n": 25, "mixtures": [[{"mean", "stddev", "weight"}, ...], ...]}
// A mixture may also be written as {"components": [...]}.
inline GmmSpec parse_gmm_spec(const json& j) {
  GmmSpec spec;
  try {
    if (j.contains("interval")) {
      const auto iv = j.at("interval").get<std::vector<double>>();
      if (iv.size() != 2) throw ValidationError("interval must be [a, b]");
      spec.interval = {iv[0], iv[1]};
    }
    if (j.contains("n")) spec.n = j.at("n").get<std::size_t>();
    for (const auto& mix : j.at("mixtures")) {
      const json& comps = mix.is_object() ? mix.at("components") : mix;
      std::vector<GmmComponent> out;
      for (const auto& c : comps)
        out.push_back({c.at("mean").get<double>(), c.at("stddev").get<double>(), c.value("weight", 1.0)});
      if (out.empty()) throw ValidationError("mixture " + std::to_string(spec.mixtures.size() + 1) + " has no components");
      spec.mixtures.push_back(std::move(out));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed gmm spec: ") + e.what());
  }
  if (spec.mixtures.empty()) throw ValidationError("gmm spec lists no mixtures");
  if (!(spec.interval.lo < spec.interval.hi)) throw ValidationError("gmm interval must satisfy a < b");
  return spec;
}

inline Matrix<double> matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty() || rows.front().empty()) throw ValidationError("cost matrix is empty");
  Matrix<double> m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw ValidationError("cost matrix is ragged");
    for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = rows[i][k];
  }
  return m;
}

// {"matrix": [[...]]} shared by all pairs, or
// {"pairs": [{"pair": [i, j], "matrix": [[...]]}, ...]} with 1-based i, j.
inline CostModel parse_cost_file(const json& j) {
  try {
    if (j.contains("matrix")) return CostModel::shared(matrix_from_json(j.at("matrix")));
    EdgeCosts costs;
    for (const auto& entry : j.at("pairs")) {
      const auto pair = entry.at("pair").get<std::vector<long long>>();
      if (pair.size() != 2 || pair[0] < 1 || pair[1] < 1) throw ValidationError("pair must be two 1-based indices");
      const auto u = static_cast<std::size_t>(pair[0] - 1), v = static_cast<std::size_t>(pair[1] - 1);
      Matrix<double> m = matrix_from_json(entry.at("matrix"));
      if (u > v) m = m.transposed();
      if (!costs.emplace(Edge(u, v), std::move(m)).second)
        throw ValidationError("cost for pair " + Edge(u, v).label() + " given twice");
    }
    return CostModel::per_pair(std::move(costs));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed cost file: ") + e.what());
  }
}

/// Header row "vertex,1,..,s", then one row per vertex; diagonal written as 0.
inline std::string weights_csv(const Matrix<double>& g) {
  std::string out = "vertex";
  for (std::size_t j = 0; j < g.cols(); ++j) out += "," + std::to_string(j + 1);
  out += "\n";
  for (std::size_t i = 0; i < g.rows(); ++i) {
    out += std::to_string(i + 1);
    for (std::size_t j = 0; j < g.cols(); ++j) out += "," + format15(i == j ? 0.0 : g(i, j));
    out += "\n";
  }
  return out;
}

inline Matrix<double> parse_weights_csv(const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line)) throw ValidationError("weights CSV is empty");
  std::vector<std::vector<double>> rows;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tok;
    std::getline(fields, tok, ',');
    std::vector<double> row;
    while (std::getline(fields, tok, ',')) row.push_back(std::stod(tok));
    rows.push_back(std::move(row));
  }
  Matrix<double> g(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw ValidationError("weights CSV is not square");
    for (std::size_t j = 0; j < rows.size(); ++j) g(i, j) = rows[i][j];
  }
  return g;
}

/// {"prufer": [...], "edges": [[a, b], ...], "cost": x}, all labels 1-based.
inline json tree_to_json(const SpanningTree& tree, double cost) {
  json edges = json::array();
  for (const auto& e : tree.edges()) edges.push_back({e.a + 1, e.b + 1});
  return {{"prufer", prufer_encode(tree).labels}, {"edges", edges}, {"cost", round15(cost)}};
}

inline SpanningTree tree_from_json(const json& j, std::size_t s) {
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    const auto ab = e.get<std::vector<std::size_t>>();
    if (ab.size() != 2 || ab[0] < 1 || ab[1] < 1) throw ValidationError("tree edge must be two 1-based labels");
    edges.emplace_back(ab[0] - 1, ab[1] - 1);
  }
  return {s, std::move(edges)};
}

inline json coupling_to_json(const CouplingTensor& t) {
  return {{"shape", t.shape()}, {"entries", std::vector<double>(t.data().begin(), t.data().end())}};
}

}  // namespace msbtree::io
