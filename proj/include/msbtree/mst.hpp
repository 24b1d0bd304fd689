#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "msbtree/error.hpp"
#include "msbtree/graph.hpp"
#include "msbtree/matrix.hpp"
#include "msbtree/measures.hpp"
#include "msbtree/sinkhorn.hpp"
#include "msbtree/tensor.hpp"
#include "msbtree/trees.hpp"

namespace msbtree {

/// Supplies the ground cost between vertices u and v (rows = u).
class CostModel {
 public:
  static CostModel metric(CostKind kind) {
    if (kind == CostKind::custom) throw ValidationError("custom costs need a matrix");
    CostModel m;
    m.kind_ = kind;
    return m;
  }

  /// One matrix for every pair; all supports must have matching sizes.
  static CostModel shared(Matrix<double> matrix) {
    CostModel m;
    m.kind_ = CostKind::custom;
    m.shared_ = PairwiseCost::custom(std::move(matrix)).matrix;
    return m;
  }

  static CostModel per_pair(EdgeCosts costs) {
    CostModel m;
    m.kind_ = CostKind::custom;
    for (auto& [e, mat] : costs) m.pairs_.emplace(e, PairwiseCost::custom(std::move(mat)).matrix);
    return m;
  }

  CostKind kind() const noexcept { return kind_; }

  PairwiseCost operator()(std::size_t u, std::size_t v, const DiscreteMeasure& mu, const DiscreteMeasure& mv) const {
    PairwiseCost c;
    if (kind_ != CostKind::custom) {
      c = build_cost(mu, mv, kind_);
    } else if (shared_) {
      c = PairwiseCost{u < v ? *shared_ : shared_->transposed(), CostKind::custom};
    } else {
      c = PairwiseCost{oriented(pairs_, u, v), CostKind::custom};
    }
    if (c.matrix.rows() != mu.size() || c.matrix.cols() != mv.size())
      throw ValidationError("cost for edge " + Edge(u, v).label() + " is " + std::to_string(c.matrix.rows()) +
                            "x" + std::to_string(c.matrix.cols()) + " but supports have sizes " +
                            std::to_string(mu.size()) + " and " + std::to_string(mv.size()));
    return c;
  }

 private:
  CostKind kind_ = CostKind::squared_euclidean;
  std::optional<Matrix<double>> shared_;
  EdgeCosts pairs_;
};

enum class MstAlgorithm { prim, boruvka };

struct SolverConfig {
  double eta = 1.0;
  SinkhornOptions sinkhorn{};
  // Accept a Sinkhorn solve that hit max_iter, flagging the edge instead of failing.
  bool allow_nonconverged = false;
  std::size_t threads = 1;  // 0 = hardware concurrency
  bool keep_plans = true;
  bool compose = true;
  std::size_t tensor_cap = kDefaultTensorCap;
  MstAlgorithm mst = MstAlgorithm::prim;
};

/// Everything computed for one vertex pair.
struct EdgeAttachment {
  double g = 0.0;
  double sb = 0.0;
  double transport_cost = 0.0;  // <C, M>, for epsilon-accuracy diagnostics
  SinkhornReport report;
  std::optional<Matrix<double>> plan;
  bool nonconverged_accepted = false;
};

/// Symmetric s x s matrix of edge weights g = SB + H(mu_a) + H(mu_b). Diagonal unused (0).
struct EdgeWeightMatrix {
  Matrix<double> g;
  std::map<Edge, EdgeAttachment> edges;
  std::vector<double> entropies;
  double seconds = 0.0;

  std::size_t vertex_count() const noexcept { return g.rows(); }
};

inline EdgeAttachment edge_weight(const DiscreteMeasure& m1, const DiscreteMeasure& m2, const PairwiseCost& cost,
                                  const SolverConfig& config) {
  const KernelMatrix kernel = gibbs_kernel(cost, config.eta);
  BimarginalCoupling coupling = sinkhorn_solve(m1.weights(), m2.weights(), kernel, config.sinkhorn);
  EdgeAttachment out;
  if (!coupling.report.converged) {
    if (!config.allow_nonconverged)
      throw NumericalError("sinkhorn did not converge in " + std::to_string(coupling.report.iterations) +
                           " iterations (residual " + std::to_string(coupling.report.residual) + ")");
    out.nonconverged_accepted = true;
  }
  out.sb = sb_value(coupling.plan, kernel);
  out.g = out.sb + entropy(m1) + entropy(m2);
  out.transport_cost = transport_cost(coupling.plan, cost);
  out.report = std::move(coupling.report);
  if (config.keep_plans) out.plan = std::move(coupling.plan);
  return out;
}

/// Fills all s(s-1)/2 edge weights, optionally across threads. Results are
/// stored by edge index, so the output does not depend on scheduling.
inline EdgeWeightMatrix build_weight_matrix(const MeasureCollection& measures, const CostModel& costs,
                                            const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t s = measures.size();
  std::vector<Edge> pairs;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j) pairs.emplace_back(i, j);

  std::vector<std::optional<EdgeAttachment>> results(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < pairs.size(); k = next++) {
      const auto& e = pairs[k];
      try {
        results[k] = edge_weight(measures[e.a], measures[e.b], costs(e.a, e.b, measures[e.a], measures[e.b]), config);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(pairs.size(), 1));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!errors[k]) continue;
    const std::string where = "edge " + pairs[k].label() + ": ";
    try {
      std::rethrow_exception(errors[k]);
    } catch (const NumericalError& ex) {
      throw NumericalError(where + ex.what());
    } catch (const CapacityError& ex) {
      throw CapacityError(where + ex.what());
    } catch (const ValidationError& ex) {
      throw ValidationError(where + ex.what());
    }
  }

  EdgeWeightMatrix out;
  out.g = Matrix<double>(s, s, 0.0);
  out.entropies = measures.entropies();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& e = pairs[k];
    out.g(e.a, e.b) = out.g(e.b, e.a) = results[k]->g;
    out.edges.emplace(e, std::move(*results[k]));
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace detail {

// Edges are ordered by (weight, min index, max index); with this strict order
// the minimum spanning tree is unique and both algorithms must agree.
using EdgeKey = std::tuple<double, std::size_t, std::size_t>;

inline EdgeKey edge_key(const Matrix<double>& w, std::size_t u, std::size_t v) {
  return {w(u, v), std::min(u, v), std::max(u, v)};
}

inline void check_weights(const Matrix<double>& w) {
  if (w.rows() != w.cols()) throw ValidationError("weight matrix must be square");
  if (w.rows() < 2) throw ValidationError("minimum spanning tree needs s >= 2");
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (i != j && !std::isfinite(w(i, j)))
        throw ValidationError("weight " + Edge(i, j).label() + " is not finite");
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = i + 1; j < w.cols(); ++j)
      if (w(i, j) != w(j, i)) throw ValidationError("weight matrix is not symmetric at " + Edge(i, j).label());
}

}  // namespace detail

/// Dense O(s^2) Prim starting from vertex 0.
inline SpanningTree mst_prim_dense(const Matrix<double>& w) {
  detail::check_weights(w);
  const std::size_t s = w.rows();
  std::vector<bool> in_tree(s, false);
  std::vector<detail::EdgeKey> best(s);
  std::vector<std::size_t> link(s, 0);
  in_tree[0] = true;
  for (std::size_t v = 1; v < s; ++v) best[v] = detail::edge_key(w, 0, v);

  std::vector<Edge> edges;
  for (std::size_t step = 1; step < s; ++step) {
    std::size_t pick = s;
    for (std::size_t v = 0; v < s; ++v)
      if (!in_tree[v] && (pick == s || best[v] < best[pick])) pick = v;
    in_tree[pick] = true;
    edges.emplace_back(link[pick], pick);
    for (std::size_t u = 0; u < s; ++u) {
      if (in_tree[u]) continue;
      const auto key = detail::edge_key(w, pick, u);
      if (key < best[u]) {
        best[u] = key;
        link[u] = pick;
      }
    }
  }
  return {s, std::move(edges)};
}

inline SpanningTree mst_prim_dense(const EdgeWeightMatrix& w) { return mst_prim_dense(w.g); }

/// Borůvka with contraction: every round each component takes its cheapest
/// outgoing edge, then the component-level matrix is rebuilt at the new size.
inline SpanningTree mst_boruvka(const Matrix<double>& w) {
  detail::check_weights(w);
  const std::size_t s = w.rows();
  struct Link {
    detail::EdgeKey key;
    Edge edge;
  };
  // cheapest[a][b]: cheapest original edge between components a and b.
  std::vector<std::vector<Link>> cheapest(s, std::vector<Link>(s));
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j)
      if (i != j) cheapest[i][j] = {detail::edge_key(w, i, j), Edge(i, j)};

  std::vector<Edge> edges;
  std::size_t k = s;
  while (k > 1) {
    DisjointSets sets(k);
    for (std::size_t a = 0; a < k; ++a) {
      std::size_t best = a == 0 ? 1 : 0;
      for (std::size_t b = 0; b < k; ++b)
        if (b != a && cheapest[a][b].key < cheapest[a][best].key) best = b;
      if (sets.unite(a, best)) edges.push_back(cheapest[a][best].edge);
    }
    std::vector<std::size_t> label(k), root_label(k, k);
    std::size_t next = 0;
    for (std::size_t a = 0; a < k; ++a) {
      const std::size_t r = sets.find(a);
      if (root_label[r] == k) root_label[r] = next++;
      label[a] = root_label[r];
    }
    std::vector<std::vector<Link>> merged(next, std::vector<Link>(next));
    std::vector<std::vector<bool>> set(next, std::vector<bool>(next, false));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) {
        const std::size_t la = label[a], lb = label[b];
        if (a == b || la == lb) continue;
        if (!set[la][lb] || cheapest[a][b].key < merged[la][lb].key) {
          merged[la][lb] = cheapest[a][b];
          set[la][lb] = true;
        }
      }
    cheapest = std::move(merged);
    k = next;
  }
  return {s, std::move(edges)};
}

inline SpanningTree mst_boruvka(const EdgeWeightMatrix& w) { return mst_boruvka(w.g); }

struct EdgeBreakdown {
  Edge edge;
  double g = 0.0;
  double sb = 0.0;
};

struct OptimalMsbResult {
  SpanningTree tree;
  PruferCode prufer;
  double total_cost = 0.0;  // sum of tree-edge g minus the summed entropies
  std::vector<EdgeBreakdown> breakdown;
  EdgeWeightMatrix weights;
  std::optional<CouplingTensor> coupling;
  std::string note;
  double weights_seconds = 0.0;
  double mst_seconds = 0.0;
  double compose_seconds = 0.0;
};

/// Optimal graph-structured MSB: pairwise SB edge weights, then an MST over
/// the complete graph. Optionally composes the full coupling on the tree.
inline OptimalMsbResult optimal_msb(const MeasureCollection& measures, const CostModel& costs,
                                    const SolverConfig& config) {
  EdgeWeightMatrix weights = build_weight_matrix(measures, costs, config);

  const auto t0 = std::chrono::steady_clock::now();
  SpanningTree tree = config.mst == MstAlgorithm::prim ? mst_prim_dense(weights) : mst_boruvka(weights);
  const double mst_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  OptimalMsbResult out{tree, prufer_encode(tree), 0.0, {}, std::move(weights), std::nullopt, {}, 0.0, mst_seconds, 0.0};
  out.weights_seconds = out.weights.seconds;
  for (const auto& e : out.tree.edges()) {
    const auto& att = out.weights.edges.at(e);
    out.breakdown.push_back({e, att.g, att.sb});
    out.total_cost += att.g;
  }
  for (double h : out.weights.entropies) out.total_cost -= h;

  if (!config.compose) return out;
  const auto shape = measures.shape();
  std::size_t entries = 1;
  bool fits = true;
  for (std::size_t n : shape) {
    if (entries > config.tensor_cap / n) {
      fits = false;
      break;
    }
    entries *= n;
  }
  if (!fits) {
    out.note = "coupling tensor not composed: product of support sizes exceeds the cap of " +
               std::to_string(config.tensor_cap) + " entries";
  } else if (!config.keep_plans) {
    out.note = "coupling tensor not composed: pairwise plans were not kept";
  } else {
    const auto t1 = std::chrono::steady_clock::now();
    EdgePlans plans;
    for (const auto& e : out.tree.edges()) plans.emplace(e, *out.weights.edges.at(e).plan);
    out.coupling = compose_tree_coupling(out.tree, plans, measures, config.tensor_cap);
    out.compose_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
  }
  return out;
}

}  // namespace msbtree
