#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "msbtree/error.hpp"
#include "msbtree/graph.hpp"
#include "msbtree/matrix.hpp"
#include "msbtree/measures.hpp"
#include "msbtree/tensor.hpp"

namespace msbtree {

inline constexpr std::size_t kDefaultEnumerationCap = 8;

/// Spanning tree over vertices 0..s-1, validated (s-1 edges, acyclic) on construction.
class SpanningTree {
 public:
  SpanningTree(std::size_t s, std::vector<Edge> edges) : s_(s), edges_(std::move(edges)) {
    if (s_ < 2) throw ValidationError("a spanning tree needs s >= 2 vertices");
    if (edges_.size() != s_ - 1)
      throw ValidationError("tree on " + std::to_string(s_) + " vertices needs " + std::to_string(s_ - 1) +
                            " edges, got " + std::to_string(edges_.size()));
    std::sort(edges_.begin(), edges_.end());
    DisjointSets sets(s_);
    for (const auto& e : edges_) {
      if (e.b >= s_) throw ValidationError("edge " + e.label() + " references a vertex beyond s");
      if (!sets.unite(e.a, e.b)) throw ValidationError("edge " + e.label() + " closes a cycle");
    }
  }

  std::size_t vertex_count() const noexcept { return s_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(s_, 0);
    for (const auto& e : edges_) {
      ++deg[e.a];
      ++deg[e.b];
    }
    return deg;
  }

  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(s_);
    for (const auto& e : edges_) {
      adj[e.a].push_back(e.b);
      adj[e.b].push_back(e.a);
    }
    return adj;
  }

  GraphStructure graph() const { return {s_, edges_}; }

  bool operator==(const SpanningTree&) const = default;

 private:
  std::size_t s_;
  std::vector<Edge> edges_;
};

/// Prüfer sequence with 1-based labels, length s-2.
struct PruferCode {
  std::vector<std::size_t> labels;

  bool operator==(const PruferCode&) const = default;
  auto operator<=>(const PruferCode&) const = default;

  // "3 3 5"
  std::string str() const {
    std::string out;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (k) out += ' ';
      out += std::to_string(labels[k]);
    }
    return out;
  }

  static PruferCode parse(const std::string& text) {
    PruferCode code;
    std::istringstream in(text);
    long long v = 0;
    while (in >> v) {
      if (v < 1) throw ValidationError("prufer label " + std::to_string(v) + " must be >= 1");
      code.labels.push_back(static_cast<std::size_t>(v));
    }
    if (!in.eof()) throw ValidationError("cannot parse prufer code '" + text + "'");
    return code;
  }
};

inline SpanningTree prufer_decode(const PruferCode& code, std::size_t s) {
  if (s < 2) throw ValidationError("prufer decoding needs s >= 2");
  if (code.labels.size() != s - 2)
    throw ValidationError("prufer code for s = " + std::to_string(s) + " must have length " +
                          std::to_string(s - 2) + ", got " + std::to_string(code.labels.size()));
  std::vector<std::size_t> degree(s, 1);
  for (std::size_t label : code.labels) {
    if (label < 1 || label > s)
      throw ValidationError("prufer label " + std::to_string(label) + " out of range 1.." + std::to_string(s));
    ++degree[label - 1];
  }
  std::vector<Edge> edges;
  for (std::size_t label : code.labels) {
    const std::size_t v = label - 1;
    const auto leaf = static_cast<std::size_t>(std::find(degree.begin(), degree.end(), 1) - degree.begin());
    edges.emplace_back(leaf, v);
    degree[leaf] = 0;
    --degree[v];
  }
  std::vector<std::size_t> last;
  for (std::size_t v = 0; v < s; ++v)
    if (degree[v] == 1) last.push_back(v);
  edges.emplace_back(last.at(0), last.at(1));
  return {s, std::move(edges)};
}

inline PruferCode prufer_encode(const SpanningTree& tree) {
  const std::size_t s = tree.vertex_count();
  auto adj = tree.adjacency();
  std::vector<std::size_t> degree = tree.degrees();
  std::vector<bool> removed(s, false);
  PruferCode code;
  for (std::size_t step = 0; step + 2 < s; ++step) {
    std::size_t leaf = 0;
    while (removed[leaf] || degree[leaf] != 1) ++leaf;
    std::size_t neighbor = 0;
    for (std::size_t u : adj[leaf])
      if (!removed[u]) neighbor = u;
    code.labels.push_back(neighbor + 1);
    removed[leaf] = true;
    --degree[neighbor];
  }
  return code;
}

/// Stream of all s^(s-2) labeled trees in lexicographic Prüfer order.
class TreeEnumerator {
 public:
  explicit TreeEnumerator(std::size_t s, std::size_t max_vertices = kDefaultEnumerationCap) : s_(s) {
    if (s < 2) throw ValidationError("enumeration needs s >= 2");
    if (s > max_vertices)
      throw CapacityError("enumerating trees on " + std::to_string(s) + " vertices exceeds the cap of " +
                          std::to_string(max_vertices) + " vertices");
    code_.labels.assign(s - 2, 1);
  }

  /// Total number of trees, s^(s-2).
  std::size_t count() const {
    std::size_t n = 1;
    for (std::size_t k = 0; k + 2 < s_; ++k) n *= s_;
    return n;
  }

  /// Writes the next code and tree; false once exhausted.
  bool next(PruferCode& code, std::optional<SpanningTree>& tree) {
    if (done_) return false;
    code = code_;
    tree.emplace(prufer_decode(code_, s_));
    advance();
    return true;
  }

 private:
  void advance() {
    for (std::size_t k = code_.labels.size(); k-- > 0;) {
      if (++code_.labels[k] <= s_) return;
      code_.labels[k] = 1;
    }
    done_ = true;
  }

  std::size_t s_;
  PruferCode code_;
  bool done_ = false;
};

inline TreeEnumerator enumerate_trees(std::size_t s, std::size_t max_vertices = kDefaultEnumerationCap) {
  return TreeEnumerator(s, max_vertices);
}

template <typename Fn>
void for_each_tree(std::size_t s, Fn&& fn, std::size_t max_vertices = kDefaultEnumerationCap) {
  TreeEnumerator trees(s, max_vertices);
  PruferCode code;
  std::optional<SpanningTree> tree;
  while (trees.next(code, tree)) fn(code, *tree);
}

namespace detail {

// Depth-first walk over every entry of the tree-composed coupling
//   M[i] = prod_edges P_e[i_a, i_b] / prod_v mu_v[i_v]^(deg v - 1)
// visiting (row-major offset, log M, additive edge term). Branches whose
// mass is exactly zero, or provably below the smallest double, are skipped.
class TreeWalk {
 public:
  TreeWalk(const SpanningTree& tree, const EdgePlans& plans, const MeasureCollection& marginals,
           const EdgeMatrices* edge_terms)
      : s_(tree.vertex_count()) {
    if (marginals.size() != s_)
      throw ValidationError("tree has " + std::to_string(s_) + " vertices but " +
                            std::to_string(marginals.size()) + " marginals were given");
    shape_ = marginals.shape();
    strides_.assign(s_, 1);
    for (std::size_t k = s_; k-- > 1;) strides_[k - 1] = strides_[k] * shape_[k];

    const auto deg = tree.degrees();
    const auto adj = tree.adjacency();
    order_.push_back(0);
    parent_.assign(s_, s_);
    std::vector<bool> seen(s_, false);
    seen[0] = true;
    for (std::size_t head = 0; head < order_.size(); ++head)
      for (std::size_t u : adj[order_[head]])
        if (!seen[u]) {
          seen[u] = true;
          parent_[u] = order_[head];
          order_.push_back(u);
        }

    // Vertex factor -(deg - 1) log mu, -inf where mu = 0.
    vertex_log_.resize(s_);
    for (std::size_t v = 0; v < s_; ++v) {
      const auto w = marginals[v].weights();
      for (double x : w)
        vertex_log_[v].push_back(x > 0.0 ? -(static_cast<double>(deg[v]) - 1.0) * std::log(x)
                                         : -std::numeric_limits<double>::infinity());
    }
    edge_log_.resize(s_);
    edge_term_.resize(s_);
    for (std::size_t v = 0; v < s_; ++v) {
      if (v == order_[0]) continue;
      const std::size_t p = parent_[v];
      const auto plan = oriented(plans, p, v);
      if (plan.rows() != shape_[p] || plan.cols() != shape_[v])
        throw ValidationError("plan for edge " + Edge(p, v).label() + " does not match the marginal sizes");
      Matrix<double> lp(plan.rows(), plan.cols());
      for (std::size_t k = 0; k < plan.size(); ++k) {
        const double x = plan.data()[k];
        if (x < 0.0 || !std::isfinite(x))
          throw ValidationError("plan for edge " + Edge(p, v).label() + " has a negative or non-finite entry");
        lp.data()[k] = x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
      }
      edge_log_[v] = std::move(lp);
      if (edge_terms) {
        auto t = oriented(*edge_terms, p, v);
        if (t.rows() != shape_[p] || t.cols() != shape_[v])
          throw ValidationError("cost for edge " + Edge(p, v).label() + " has the wrong shape");
        edge_term_[v] = std::move(t);
      }
    }

    // Upper bound on what the vertices after position k can add to log M.
    headroom_.assign(s_ + 1, 0.0);
    for (std::size_t k = s_; k-- > 0;) {
      double best = -std::numeric_limits<double>::infinity();
      for (double x : vertex_log_[order_[k]]) best = std::max(best, x);
      headroom_[k] = headroom_[k + 1] + std::max(best, 0.0);
    }
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }

  template <typename Visit>
  void run(Visit&& visit) {
    idx_.assign(s_, 0);
    descend(0, 0, 0.0, 0.0, visit);
  }

 private:
  // exp() of anything below this is exactly 0 in double precision.
  static constexpr double kLogFloor = -746.0;

  template <typename Visit>
  void descend(std::size_t depth, std::size_t offset, double log_m, double term, Visit& visit) {
    const std::size_t v = order_[depth];
    const bool root = depth == 0;
    const std::size_t p = root ? 0 : parent_[v];
    for (std::size_t i = 0; i < shape_[v]; ++i) {
      double lm = log_m + vertex_log_[v][i];
      double tm = term;
      if (!root) {
        lm += edge_log_[v](idx_[p], i);
        if (!edge_term_[v].empty()) tm += edge_term_[v](idx_[p], i);
      }
      if (std::isnan(lm) || lm + headroom_[depth + 1] < kLogFloor) continue;
      idx_[v] = i;
      const std::size_t off = offset + i * strides_[v];
      if (depth + 1 == s_)
        visit(off, lm, tm);
      else
        descend(depth + 1, off, lm, tm, visit);
    }
  }

  std::size_t s_;
  std::vector<std::size_t> shape_, strides_, order_, parent_, idx_;
  std::vector<std::vector<double>> vertex_log_;
  std::vector<Matrix<double>> edge_log_, edge_term_;
  std::vector<double> headroom_;
};

}  // namespace detail

/// Tree-structured optimal coupling assembled from pairwise optimal plans:
/// the product of the edge plans divided by mu_v^(deg v - 1) at every vertex.
/// Entries where a required marginal weight is zero are 0.
inline CouplingTensor compose_tree_coupling(const SpanningTree& tree, const EdgePlans& plans,
                                            const MeasureCollection& marginals,
                                            std::size_t cap = kDefaultTensorCap) {
  detail::TreeWalk walk(tree, plans, marginals, nullptr);
  CouplingTensor out(walk.shape(), cap);
  auto data = out.data();
  walk.run([&](std::size_t off, double log_m, double) { data[off] = std::exp(log_m); });
  return out;
}

/// eta^-1 <C + eta log M, M> for the composed tree coupling, streamed without
/// materializing the tensor. Here C is the tree's own cost tensor.
inline double composed_tree_objective(const SpanningTree& tree, const EdgePlans& plans, const EdgeCosts& costs,
                                      const MeasureCollection& marginals, double eta) {
  if (!(eta > 0.0)) throw ValidationError("eta must be > 0");
  EdgeMatrices scaled;
  for (const auto& e : tree.edges()) {
    const auto it = costs.find(e);
    if (it == costs.end()) throw ValidationError("missing cost for edge " + e.label());
    Matrix<double> m = it->second;
    for (auto& x : m.data()) x /= eta;
    scaled.emplace(e, std::move(m));
  }
  detail::TreeWalk walk(tree, plans, marginals, &scaled);
  double acc = 0.0;
  walk.run([&](std::size_t, double log_m, double c) {
    const double m = std::exp(log_m);
    if (m > 0.0) acc += m * (c + log_m);
  });
  return acc;
}

/// sum over edges of SB + sum over vertices of (deg - 1) H.
inline double tree_cost_decomposed(const SpanningTree& tree, const std::map<Edge, double>& sb_values,
                                   std::span<const double> entropies) {
  if (entropies.size() != tree.vertex_count()) throw ValidationError("need one entropy per vertex");
  double total = 0.0;
  for (const auto& e : tree.edges()) {
    const auto it = sb_values.find(e);
    if (it == sb_values.end()) throw ValidationError("missing SB value for edge " + e.label());
    total += it->second;
  }
  const auto deg = tree.degrees();
  for (std::size_t v = 0; v < deg.size(); ++v) total += (static_cast<double>(deg[v]) - 1.0) * entropies[v];
  return total;
}

/// sum over edges of g minus sum over vertices of H.
inline double tree_cost_additive(const SpanningTree& tree, const Matrix<double>& weights,
                                 std::span<const double> entropies) {
  const std::size_t s = tree.vertex_count();
  if (weights.rows() != s || weights.cols() != s) throw ValidationError("weight matrix must be s x s");
  if (entropies.size() != s) throw ValidationError("need one entropy per vertex");
  double total = 0.0;
  for (const auto& e : tree.edges()) total += weights(e.a, e.b);
  for (double h : entropies) total -= h;
  return total;
}

/// Graphviz rendering with 1-based labels; edge weights become labels when given.
inline std::string to_dot(const SpanningTree& tree, const Matrix<double>* weights = nullptr) {
  std::ostringstream out;
  out.precision(15);
  out << "graph msb_tree {\n";
  for (std::size_t v = 0; v < tree.vertex_count(); ++v) out << "  " << v + 1 << ";\n";
  for (const auto& e : tree.edges()) {
    out << "  " << e.a + 1 << " -- " << e.b + 1;
    if (weights) out << " [label=\"" << (*weights)(e.a, e.b) << "\"]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace msbtree
