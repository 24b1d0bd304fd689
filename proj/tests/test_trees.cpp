#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "support.hpp"

using namespace msbtree;
using fixtures::random_collection;
using fixtures::random_tree;

namespace {

std::vector<Edge> edges(std::initializer_list<std::pair<std::size_t, std::size_t>> one_based) {
  std::vector<Edge> out;
  for (auto [a, b] : one_based) out.emplace_back(a - 1, b - 1);
  std::sort(out.begin(), out.end());
  return out;
}

struct TreeInstance {
  EdgePlans plans;
  EdgeCosts costs;
  std::map<Edge, double> sb;
};

TreeInstance solve_edges(const SpanningTree& tree, const MeasureCollection& ms, double eta) {
  TreeInstance out;
  for (const auto& e : tree.edges()) {
    const auto cost = build_cost(ms[e.a], ms[e.b], CostKind::squared_euclidean);
    const auto k = gibbs_kernel(cost, eta);
    auto r = sinkhorn_solve(ms[e.a].weights(), ms[e.b].weights(), k);
    out.sb.emplace(e, sb_value(r, k));
    out.plans.emplace(e, std::move(r.plan));
    out.costs.emplace(e, cost.matrix);
  }
  return out;
}

}  // namespace

TEST(SpanningTree, Validation) {
  EXPECT_THROW(SpanningTree(3, {Edge(0, 1)}), ValidationError);
  EXPECT_THROW(SpanningTree(4, {Edge(0, 1), Edge(1, 2), Edge(0, 2)}), ValidationError);
  EXPECT_THROW(SpanningTree(3, {Edge(0, 1), Edge(1, 7)}), ValidationError);
  EXPECT_NO_THROW(SpanningTree(3, {Edge(1, 0), Edge(2, 1)}));
}

TEST(PruferDecode, SingleEntryGivesStar) {
  EXPECT_EQ(prufer_decode({{1}}, 3).edges(), edges({{1, 2}, {1, 3}}));
}

TEST(PruferDecode, ThreeThreeFive) {
  EXPECT_EQ(prufer_decode({{3, 3, 5}}, 5).edges(), edges({{1, 3}, {2, 3}, {3, 5}, {4, 5}}));
  EXPECT_EQ(prufer_encode(prufer_decode({{3, 3, 5}}, 5)), (PruferCode{{3, 3, 5}}));
}

TEST(PruferDecode, EmptyCodeIsSingleEdge) {
  EXPECT_EQ(prufer_decode({}, 2).edges(), edges({{1, 2}}));
  EXPECT_EQ(prufer_encode(SpanningTree(2, {Edge(0, 1)})).labels.size(), 0u);
}

TEST(PruferDecode, Errors) {
  EXPECT_THROW(prufer_decode({{4}}, 3), ValidationError);
  EXPECT_THROW(prufer_decode({{0}}, 3), ValidationError);
  EXPECT_THROW(prufer_decode({{1, 1}}, 3), ValidationError);
  EXPECT_THROW(prufer_decode({}, 1), ValidationError);
}

TEST(PruferEncode, StarAndPath) {
  EXPECT_EQ(prufer_encode(SpanningTree(4, edges({{1, 2}, {1, 3}, {1, 4}}))), (PruferCode{{1, 1}}));
  EXPECT_EQ(prufer_encode(SpanningTree(4, edges({{1, 2}, {2, 3}, {3, 4}}))), (PruferCode{{2, 3}}));
}

TEST(PruferCode, TextForm) {
  EXPECT_EQ((PruferCode{{3, 3, 5}}).str(), "3 3 5");
  EXPECT_EQ(PruferCode::parse("3 3 5"), (PruferCode{{3, 3, 5}}));
  EXPECT_EQ(PruferCode::parse(""), PruferCode{});
  EXPECT_THROW(PruferCode::parse("3 x"), ValidationError);
  EXPECT_THROW(PruferCode::parse("0 1"), ValidationError);
}

TEST(PruferProperties, RoundTripAndDegrees) {
  std::mt19937_64 rng(20);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t s = 2 + rep % 7;
    const auto code = fixtures::random_code(s, rng);
    const auto tree = prufer_decode(code, s);
    EXPECT_EQ(prufer_encode(tree), code);
    EXPECT_EQ(prufer_decode(prufer_encode(tree), s), tree);
    const auto deg = tree.degrees();
    for (std::size_t v = 0; v < s; ++v)
      EXPECT_EQ(deg[v], 1u + static_cast<std::size_t>(std::count(code.labels.begin(), code.labels.end(), v + 1)));
    std::size_t excess = 0;
    for (auto d : deg) excess += d - 1;
    EXPECT_EQ(excess, s - 2);
  }
}

TEST(EnumerateTrees, CountsAndDistinctness) {
  for (std::size_t s : {2u, 3u, 4u, 5u, 6u}) {
    auto trees = enumerate_trees(s);
    std::set<std::vector<Edge>> seen;
    PruferCode code, prev;
    std::optional<SpanningTree> tree;
    std::size_t n = 0;
    while (trees.next(code, tree)) {
      if (n > 0) {
        EXPECT_LT(prev, code);
      }
      prev = code;
      seen.insert(tree->edges());
      ++n;
    }
    EXPECT_EQ(n, trees.count());
    EXPECT_EQ(seen.size(), n);
  }
  EXPECT_EQ(enumerate_trees(3).count(), 3u);
  EXPECT_EQ(enumerate_trees(4).count(), 16u);
  EXPECT_EQ(enumerate_trees(5).count(), 125u);
}

TEST(EnumerateTrees, CapIsEnforced) {
  EXPECT_THROW(enumerate_trees(9), CapacityError);
  EXPECT_NO_THROW(enumerate_trees(9, 9));
  EXPECT_THROW(enumerate_trees(1), ValidationError);
}

TEST(ComposeTreeCoupling, TwoVerticesIsThePlan) {
  std::mt19937_64 rng(21);
  const auto ms = random_collection(2, 2, 5, rng);
  const SpanningTree t(2, {Edge(0, 1)});
  const auto inst = solve_edges(t, ms, 1.0);
  const auto m = compose_tree_coupling(t, inst.plans, ms);
  const auto& plan = inst.plans.at(Edge(0, 1));
  for (std::size_t k = 0; k < plan.size(); ++k) EXPECT_NEAR(m.data()[k], plan.data()[k], 1e-15);
}

TEST(ComposeTreeCoupling, ZeroCostPathIsProduct) {
  std::mt19937_64 rng(22);
  const auto ms = random_collection(3, 2, 4, rng);
  const SpanningTree t(3, {Edge(0, 1), Edge(1, 2)});
  EdgePlans plans;
  for (const auto& e : t.edges()) {
    Matrix<double> p(ms[e.a].size(), ms[e.b].size());
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) p(i, j) = ms[e.a].weight(i) * ms[e.b].weight(j);
    plans.emplace(e, p);
  }
  const auto m = compose_tree_coupling(t, plans, ms);
  MultiIndex idx(ms.shape());
  std::size_t lin = 0;
  do {
    EXPECT_NEAR(m.data()[lin++], ms[0].weight(idx[0]) * ms[1].weight(idx[1]) * ms[2].weight(idx[2]), 1e-15);
  } while (idx.next());
}

TEST(ComposeTreeCoupling, MatchesMultimarginalSinkhorn) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t s = 3 + rep % 2;
    const auto ms = random_collection(s, 2, 4, rng);
    const auto tree = random_tree(s, rng);
    const double eta = rep % 3 == 0 ? 1.0 : 5.0;
    const auto inst = solve_edges(tree, ms, eta);
    const auto composed = compose_tree_coupling(tree, inst.plans, ms);
    const auto mm = mm_sinkhorn(ms, tree.graph(), inst.costs, eta);
    ASSERT_TRUE(mm.report.converged);
    double gap = 0.0;
    for (std::size_t k = 0; k < composed.size(); ++k)
      gap = std::max(gap, std::abs(composed.data()[k] - mm.tensor.data()[k]));
    EXPECT_LE(gap, 1e-6);
    for (std::size_t t = 0; t < s; ++t)
      EXPECT_LE(detail::total_variation(project(composed, t), ms[t].weights()), 1e-6);
    const auto c = cost_tensor(tree.graph(), inst.costs, ms.shape());
    const double decomposed = tree_cost_decomposed(tree, inst.sb, ms.entropies());
    EXPECT_NEAR(decomposed, msb_objective(composed, c, eta) / eta, 1e-6);
    EXPECT_NEAR(composed_tree_objective(tree, inst.plans, inst.costs, ms, eta), msb_objective(composed, c, eta) / eta,
                1e-10);
  }
}

TEST(ComposeTreeCoupling, ZeroWeightVertexEntries) {
  const auto half = DiscreteMeasure::uniform({{0.0}, {1.0}});
  const MeasureCollection ms({half, DiscreteMeasure({{0.0}, {5.0}}, {1.0, 0.0}), half});
  const SpanningTree t(3, {Edge(0, 1), Edge(1, 2)});
  const auto inst = solve_edges(t, ms, 1.0);
  const auto m = compose_tree_coupling(t, inst.plans, ms);
  for (double x : m.data()) EXPECT_TRUE(std::isfinite(x));
  EXPECT_EQ(project(m, 1)[1], 0.0);
  EXPECT_NEAR(m.sum(), 1.0, 1e-12);
}

TEST(ComposeTreeCoupling, Errors) {
  const auto half = DiscreteMeasure::uniform({{0.0}, {1.0}});
  const MeasureCollection ms({half, half, half});
  const SpanningTree t(3, {Edge(0, 1), Edge(1, 2)});
  EdgePlans only_one{{Edge(0, 1), Matrix<double>(2, 2, 0.25)}};
  EXPECT_THROW(compose_tree_coupling(t, only_one, ms), ValidationError);
  EdgePlans both{{Edge(0, 1), Matrix<double>(2, 2, 0.25)}, {Edge(1, 2), Matrix<double>(2, 2, 0.25)}};
  EXPECT_THROW(compose_tree_coupling(t, both, ms, 4), CapacityError);
}

TEST(TreeCost, ZeroCostUniformPath) {
  const auto half = DiscreteMeasure::uniform({{0.0}, {1.0}});
  const MeasureCollection ms({half, half, half});
  const SpanningTree t(3, {Edge(0, 1), Edge(1, 2)});
  const std::map<Edge, double> sb{{Edge(0, 1), -std::log(4.0)}, {Edge(1, 2), -std::log(4.0)}};
  EXPECT_NEAR(tree_cost_decomposed(t, sb, ms.entropies()), -2.0794415416798357, 1e-15);
  DenseTensor product({2, 2, 2}, kDefaultTensorCap, 0.125);
  EXPECT_NEAR(msb_objective(product, DenseTensor({2, 2, 2}), 1.0), -2.0794415416798357, 1e-15);
}

TEST(TreeCost, TwoVerticesIsTheSbValue) {
  const SpanningTree t(2, {Edge(0, 1)});
  const std::vector<double> h{0.3, 0.9};
  EXPECT_EQ(tree_cost_decomposed(t, {{Edge(0, 1), -0.7}}, h), -0.7);
  EXPECT_THROW(tree_cost_decomposed(t, {}, h), ValidationError);
}

TEST(TreeCost, ZeroWeightsGiveMinusEntropySum) {
  const SpanningTree t(4, edges({{1, 2}, {2, 3}, {2, 4}}));
  const std::vector<double> h{0.1, 0.2, 0.3, 0.4};
  EXPECT_NEAR(tree_cost_additive(t, Matrix<double>(4, 4, 0.0), h), -1.0, 1e-15);
}

TEST(TreeCost, AdditiveEqualsDecomposed) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-3.0, 3.0), hu(0.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t s = 2 + rep % 7;
    const auto t = random_tree(s, rng);
    std::vector<double> h(s);
    for (auto& x : h) x = hu(rng);
    Matrix<double> g(s, s, 0.0);
    std::map<Edge, double> sb;
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i + 1; j < s; ++j) {
        const double v = u(rng);
        sb[Edge(i, j)] = v;
        g(i, j) = g(j, i) = v + h[i] + h[j];
      }
    EXPECT_NEAR(tree_cost_additive(t, g, h), tree_cost_decomposed(t, sb, h), 1e-12);
  }
}

TEST(ToDot, LabelsAreOneBased) {
  const auto dot = to_dot(prufer_decode({{3, 3, 5}}, 5));
  EXPECT_NE(dot.find("graph msb_tree"), std::string::npos);
  EXPECT_NE(dot.find("1 -- 3"), std::string::npos);
  EXPECT_NE(dot.find("4 -- 5"), std::string::npos);
}
