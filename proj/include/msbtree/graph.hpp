#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "msbtree/error.hpp"
#include "msbtree/matrix.hpp"

namespace msbtree {

/// Undirected edge between 0-based vertex labels, stored with a < b.
struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;

  Edge() = default;
  Edge(std::size_t u, std::size_t v) : a(std::min(u, v)), b(std::max(u, v)) {
    if (u == v) throw ValidationError("self-loop at vertex " + std::to_string(u + 1));
  }

  auto operator<=>(const Edge&) const = default;

  std::string label() const { return "(" + std::to_string(a + 1) + ", " + std::to_string(b + 1) + ")"; }
};

// Union-find with path halving.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }

  bool unite(std::size_t x, std::size_t y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    parent_[std::max(x, y)] = std::min(x, y);
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Edge set over s vertices: no self-loops, no duplicates. Need not be connected.
class GraphStructure {
 public:
  GraphStructure(std::size_t s, std::vector<Edge> edges) : s_(s), edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end());
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      if (edges_[k].b >= s_)
        throw ValidationError("edge " + edges_[k].label() + " references a vertex beyond s = " + std::to_string(s_));
      if (k > 0 && edges_[k] == edges_[k - 1]) throw ValidationError("duplicate edge " + edges_[k].label());
    }
  }

  static GraphStructure path(std::size_t s) {
    std::vector<Edge> e;
    for (std::size_t k = 0; k + 1 < s; ++k) e.emplace_back(k, k + 1);
    return {s, std::move(e)};
  }

  static GraphStructure star(std::size_t s, std::size_t center = 0) {
    std::vector<Edge> e;
    for (std::size_t k = 0; k < s; ++k)
      if (k != center) e.emplace_back(center, k);
    return {s, std::move(e)};
  }

  static GraphStructure complete(std::size_t s) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i + 1; j < s; ++j) e.emplace_back(i, j);
    return {s, std::move(e)};
  }

  std::size_t vertex_count() const noexcept { return s_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  bool is_connected() const {
    if (s_ == 0) return false;
    DisjointSets sets(s_);
    std::size_t components = s_;
    for (const auto& e : edges_)
      if (sets.unite(e.a, e.b)) --components;
    return components == 1;
  }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(s_, 0);
    for (const auto& e : edges_) {
      ++deg[e.a];
      ++deg[e.b];
    }
    return deg;
  }

 private:
  std::size_t s_;
  std::vector<Edge> edges_;
};

/// One matrix per edge; the matrix for Edge{a, b} has rows indexed by a.
using EdgeMatrices = std::map<Edge, Matrix<double>>;
using EdgeCosts = EdgeMatrices;
using EdgePlans = EdgeMatrices;

/// Edge matrix oriented as rows = u, columns = v.
inline Matrix<double> oriented(const EdgeMatrices& mats, std::size_t u, std::size_t v) {
  const auto it = mats.find(Edge(u, v));
  if (it == mats.end()) throw ValidationError("missing matrix for edge " + Edge(u, v).label());
  return u < v ? it->second : it->second.transposed();
}

}  // namespace msbtree
