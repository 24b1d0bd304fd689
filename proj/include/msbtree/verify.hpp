#pragma once

// Exhaustive tree ranking and oracle comparison: the slow paths used to
// check the MST construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msbtree/error.hpp"
#include "msbtree/graph.hpp"
#include "msbtree/measures.hpp"
#include "msbtree/mst.hpp"
#include "msbtree/oracle.hpp"
#include "msbtree/sinkhorn.hpp"
#include "msbtree/trees.hpp"

namespace msbtree {

enum class DirectMethod { none, oracle, composed };

inline const char* to_string(DirectMethod m) {
  switch (m) {
    case DirectMethod::none: return "none";
    case DirectMethod::oracle: return "oracle";
    case DirectMethod::composed: return "composed";
  }
  return "unknown";
}

enum class DirectMode { automatic, oracle, composed, none };

// Largest tensor for which `automatic` runs a dense multimarginal solve per tree.
inline constexpr std::size_t kOracleAutoEntries = 10'000;

struct RankedTree {
  PruferCode code;
  SpanningTree tree;
  double cost_additive = 0.0;
  std::optional<double> cost_direct;
  DirectMethod method = DirectMethod::none;
};

inline EdgeCosts tree_edge_costs(const SpanningTree& tree, const MeasureCollection& measures, const CostModel& costs) {
  EdgeCosts out;
  for (const auto& e : tree.edges()) out.emplace(e, costs(e.a, e.b, measures[e.a], measures[e.b]).matrix);
  return out;
}

/// eta^-1 <C + eta log M, M> with M the dense multimarginal Sinkhorn solution on the tree.
inline double oracle_tree_cost(const SpanningTree& tree, const MeasureCollection& measures, const CostModel& costs,
                               const SolverConfig& config) {
  const EdgeCosts ec = tree_edge_costs(tree, measures, costs);
  const auto graph = tree.graph();
  const auto mm = mm_sinkhorn(measures, graph, ec, config.eta, config.sinkhorn, config.tensor_cap);
  if (!mm.report.converged && !config.allow_nonconverged)
    throw NumericalError("multimarginal sinkhorn did not converge in " + std::to_string(mm.report.iterations) +
                         " sweeps (residual " + std::to_string(mm.report.residual) + ")");
  const auto shape = measures.shape();
  const auto c = cost_tensor(graph, ec, shape, config.tensor_cap);
  return msb_objective(mm.tensor, c, config.eta) / config.eta;
}

/// All s^(s-2) trees sorted by additive cost (stable, so ties keep Prüfer
/// order). The first `top_k` rows (all when 0) also get a directly computed
/// cost according to `mode`.
inline std::vector<RankedTree> rank_trees(const MeasureCollection& measures, const CostModel& costs,
                                          const EdgeWeightMatrix& weights, const SolverConfig& config,
                                          std::size_t top_k, DirectMode mode,
                                          std::size_t max_vertices = kDefaultEnumerationCap) {
  std::vector<RankedTree> rows;
  for_each_tree(
      measures.size(),
      [&](const PruferCode& code, const SpanningTree& tree) {
        rows.push_back({code, tree, tree_cost_additive(tree, weights.g, weights.entropies), std::nullopt,
                        DirectMethod::none});
      },
      max_vertices);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const RankedTree& x, const RankedTree& y) { return x.cost_additive < y.cost_additive; });
  if (top_k != 0 && rows.size() > top_k) rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(top_k), rows.end());

  std::size_t entries = 1;
  bool oracle_fits = true;
  for (std::size_t n : measures.shape()) {
    if (entries > config.tensor_cap / n) {
      oracle_fits = false;
      break;
    }
    entries *= n;
  }
  const bool plans_kept = std::all_of(weights.edges.begin(), weights.edges.end(),
                                      [](const auto& kv) { return kv.second.plan.has_value(); });
  DirectMethod method = DirectMethod::none;
  switch (mode) {
    case DirectMode::none: break;
    case DirectMode::oracle:
      if (!oracle_fits) throw CapacityError("oracle tensor exceeds the cap of " + std::to_string(config.tensor_cap));
      method = DirectMethod::oracle;
      break;
    case DirectMode::composed:
      if (!plans_kept) throw ValidationError("composed costs need the pairwise plans");
      method = DirectMethod::composed;
      break;
    case DirectMode::automatic:
      if (oracle_fits && entries <= kOracleAutoEntries)
        method = DirectMethod::oracle;
      else if (plans_kept)
        method = DirectMethod::composed;
      break;
  }

  for (auto& row : rows) {
    row.method = method;
    if (method == DirectMethod::oracle) {
      row.cost_direct = oracle_tree_cost(row.tree, measures, costs, config);
    } else if (method == DirectMethod::composed) {
      EdgePlans plans;
      for (const auto& e : row.tree.edges()) plans.emplace(e, *weights.edges.at(e).plan);
      row.cost_direct =
          composed_tree_objective(row.tree, plans, tree_edge_costs(row.tree, measures, costs), measures, config.eta);
    }
  }
  return rows;
}

struct OracleComparison {
  double sup_norm_gap = 0.0;     // composed tensor vs multimarginal Sinkhorn tensor
  double cost_decomposed = 0.0;  // sum SB + sum (deg - 1) H
  double cost_oracle = 0.0;      // eta^-1 <C + eta log M, M> at the oracle solution
  double cost_composed = 0.0;    // same objective at the composed tensor
  double cost_gap = 0.0;         // |cost_decomposed - cost_oracle|
  std::size_t entries = 0;
  SinkhornReport oracle_report;
};

/// Solves the MSB on a fixed tree twice, by pairwise composition and by dense
/// multimarginal Sinkhorn, and reports how far apart the two are.
inline OracleComparison compare_with_oracle(const MeasureCollection& measures, const CostModel& costs,
                                            const SpanningTree& tree, const SolverConfig& config) {
  if (tree.vertex_count() != measures.size())
    throw ValidationError("tree has " + std::to_string(tree.vertex_count()) + " vertices but " +
                          std::to_string(measures.size()) + " measures were given");
  SolverConfig cfg = config;
  cfg.keep_plans = true;
  const EdgeCosts ec = tree_edge_costs(tree, measures, costs);
  EdgePlans plans;
  std::map<Edge, double> sb;
  for (const auto& e : tree.edges()) {
    auto att = edge_weight(measures[e.a], measures[e.b], PairwiseCost{ec.at(e), costs.kind()}, cfg);
    sb.emplace(e, att.sb);
    plans.emplace(e, std::move(*att.plan));
  }
  const auto shape = measures.shape();
  const auto composed = compose_tree_coupling(tree, plans, measures, cfg.tensor_cap);
  const auto graph = tree.graph();
  const auto mm = mm_sinkhorn(measures, graph, ec, cfg.eta, cfg.sinkhorn, cfg.tensor_cap);
  if (!mm.report.converged && !cfg.allow_nonconverged)
    throw NumericalError("multimarginal sinkhorn did not converge in " + std::to_string(mm.report.iterations) +
                         " sweeps (residual " + std::to_string(mm.report.residual) + ")");
  const auto c = cost_tensor(graph, ec, shape, cfg.tensor_cap);

  OracleComparison out;
  out.entries = composed.size();
  for (std::size_t k = 0; k < composed.size(); ++k)
    out.sup_norm_gap = std::max(out.sup_norm_gap, std::abs(composed.data()[k] - mm.tensor.data()[k]));
  out.cost_decomposed = tree_cost_decomposed(tree, sb, measures.entropies());
  out.cost_oracle = msb_objective(mm.tensor, c, cfg.eta) / cfg.eta;
  out.cost_composed = msb_objective(composed, c, cfg.eta) / cfg.eta;
  out.cost_gap = std::abs(out.cost_decomposed - out.cost_oracle);
  out.oracle_report = mm.report;
  return out;
}

}  // namespace msbtree
