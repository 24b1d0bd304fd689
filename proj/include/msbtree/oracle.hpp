#pragma once

// Dense reference solver for graph-structured multimarginal Schrödinger bridges.
// Everything here materializes the full s-way tensor and is exponential in s;
// it exists to check the tree decomposition on small instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "msbtree/error.hpp"
#include "msbtree/graph.hpp"
#include "msbtree/measures.hpp"
#include "msbtree/sinkhorn.hpp"
#include "msbtree/tensor.hpp"

namespace msbtree {

/// C[i_1..i_s] = sum over edges (a, b) of C_ab[i_a, i_b].
inline DenseTensor cost_tensor(const GraphStructure& graph, const EdgeCosts& costs,
                               std::span<const std::size_t> shape, std::size_t cap = kDefaultTensorCap) {
  if (shape.size() != graph.vertex_count())
    throw ValidationError("shape has " + std::to_string(shape.size()) + " axes for " +
                          std::to_string(graph.vertex_count()) + " vertices");
  std::vector<const Matrix<double>*> mats;
  for (const auto& e : graph.edges()) {
    const auto it = costs.find(e);
    if (it == costs.end()) throw ValidationError("missing cost for edge " + e.label());
    if (it->second.rows() != shape[e.a] || it->second.cols() != shape[e.b])
      throw ValidationError("cost for edge " + e.label() + " has the wrong shape");
    mats.push_back(&it->second);
  }
  DenseTensor out({shape.begin(), shape.end()}, cap);
  MultiIndex idx({shape.begin(), shape.end()});
  auto data = out.data();
  std::size_t lin = 0;
  do {
    double c = 0.0;
    for (std::size_t k = 0; k < mats.size(); ++k) {
      const auto& e = graph.edges()[k];
      c += (*mats[k])(idx[e.a], idx[e.b]);
    }
    data[lin++] = c;
  } while (idx.next());
  return out;
}

/// Marginal along axis sigma (0-based): sum over every other index.
inline std::vector<double> project(const DenseTensor& m, std::size_t sigma) {
  if (sigma >= m.rank())
    throw ValidationError("projection axis " + std::to_string(sigma + 1) + " out of range 1.." +
                          std::to_string(m.rank()));
  const std::size_t n = m.shape()[sigma];
  const std::size_t stride = m.strides()[sigma];
  std::vector<double> out(n, 0.0);
  const auto data = m.data();
  for (std::size_t lin = 0; lin < data.size(); ++lin) out[(lin / stride) % n] += data[lin];
  return out;
}

struct MultimarginalCoupling {
  CouplingTensor tensor;
  std::vector<std::vector<double>> log_u;  // per-vertex log scalings
  SinkhornReport report;
};

namespace detail {

// Grouped log-sum-exp of `values` by the index along one axis.
inline std::vector<double> grouped_log_sum_exp(std::span<const double> values, std::size_t n,
                                                std::size_t stride) {
  std::vector<double> hi(n, kNegInf), acc(n, 0.0);
  for (std::size_t lin = 0; lin < values.size(); ++lin) {
    auto& h = hi[(lin / stride) % n];
    h = std::max(h, values[lin]);
  }
  for (std::size_t lin = 0; lin < values.size(); ++lin) {
    const std::size_t r = (lin / stride) % n;
    if (hi[r] != kNegInf) acc[r] += std::exp(values[lin] - hi[r]);
  }
  for (std::size_t r = 0; r < n; ++r) hi[r] = hi[r] == kNegInf ? kNegInf : hi[r] + std::log(acc[r]);
  return hi;
}

}  // namespace detail

/// Multimarginal Sinkhorn on a dense tensor, log-domain, cyclic over sigma.
/// Projections are plain summations over the whole tensor. The stopping rule
/// is the bimarginal one applied to all s marginals.
inline MultimarginalCoupling mm_sinkhorn(const MeasureCollection& marginals, const GraphStructure& graph,
                                         const EdgeCosts& costs, double eta, const SinkhornOptions& opts = {},
                                         std::size_t cap = kDefaultTensorCap) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be positive and finite");
  if (!(opts.tol > 0.0)) throw ValidationError("tol must be > 0");
  if (opts.max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (graph.vertex_count() != marginals.size())
    throw ValidationError("graph has " + std::to_string(graph.vertex_count()) + " vertices but " +
                          std::to_string(marginals.size()) + " marginals were given");
  if (!graph.is_connected()) throw ValidationError("graph structure is not connected");

  const auto shape = marginals.shape();
  const std::size_t s = shape.size();
  DenseTensor log_k = cost_tensor(graph, costs, shape, cap);
  for (auto& c : log_k.data()) c = -c / eta;

  std::vector<std::vector<double>> f(s), log_mu(s);
  for (std::size_t k = 0; k < s; ++k) {
    f[k].assign(shape[k], 0.0);
    for (double w : marginals[k].weights()) log_mu[k].push_back(w > 0.0 ? std::log(w) : detail::kNegInf);
  }

  const auto& strides = log_k.strides();
  const auto lk = log_k.data();
  const std::size_t total = lk.size();
  std::vector<double> work(total);
  std::vector<std::size_t> axis(s);

  // work[lin] = log K + sum_{tau != skip} f_tau(i_tau)
  auto fill_work = [&](std::size_t skip) {
    std::fill(axis.begin(), axis.end(), 0);
    for (std::size_t lin = 0; lin < total; ++lin) {
      double v = lk[lin];
      for (std::size_t t = 0; t < s; ++t)
        if (t != skip) v += f[t][axis[t]];
      work[lin] = v;
      for (std::size_t t = s; t-- > 0;) {
        if (++axis[t] < shape[t]) break;
        axis[t] = 0;
      }
    }
  };

  MultimarginalCoupling out;
  std::vector<std::vector<double>> proj(s);
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t sigma = 0; sigma < s; ++sigma) {
      fill_work(sigma);
      const auto lse = detail::grouped_log_sum_exp(work, shape[sigma], strides[sigma]);
      for (std::size_t r = 0; r < shape[sigma]; ++r) {
        if (log_mu[sigma][r] == detail::kNegInf) {
          f[sigma][r] = detail::kNegInf;
        } else if (lse[r] == detail::kNegInf) {
          throw NumericalError("kernel slice " + std::to_string(r) + " of vertex " + std::to_string(sigma + 1) +
                               " carries no mass");
        } else {
          f[sigma][r] = log_mu[sigma][r] - lse[r];
        }
      }
    }

    fill_work(s);
    for (std::size_t t = 0; t < s; ++t) proj[t].assign(shape[t], 0.0);
    std::fill(axis.begin(), axis.end(), 0);
    for (std::size_t lin = 0; lin < total; ++lin) {
      const double m = std::exp(work[lin]);
      for (std::size_t t = 0; t < s; ++t) proj[t][axis[t]] += m;
      for (std::size_t t = s; t-- > 0;) {
        if (++axis[t] < shape[t]) break;
        axis[t] = 0;
      }
    }
    double residual = 0.0;
    for (std::size_t t = 0; t < s; ++t)
      residual = std::max(residual, detail::total_variation(proj[t], marginals[t].weights()));
    if (!std::isfinite(residual)) throw NumericalError("multimarginal residual became non-finite");
    out.report.iterations = it;
    out.report.residual = residual;
    if (opts.record_history) out.report.residual_history.push_back(residual);
    if (residual <= opts.tol) {
      out.report.converged = true;
      break;
    }
  }

  fill_work(s);
  out.tensor = DenseTensor(shape, cap);
  auto md = out.tensor.data();
  for (std::size_t lin = 0; lin < total; ++lin) md[lin] = std::exp(work[lin]);
  out.log_u = std::move(f);
  return out;
}

/// <C + eta log M, M> with 0 log 0 = 0.
inline double msb_objective(const DenseTensor& m, const DenseTensor& cost, double eta) {
  if (m.shape() != cost.shape()) throw ValidationError("msb_objective shape mismatch");
  const auto md = m.data();
  const auto cd = cost.data();
  double v = 0.0;
  for (std::size_t k = 0; k < md.size(); ++k)
    if (md[k] > 0.0) v += md[k] * (cd[k] + eta * std::log(md[k]));
  return v;
}

}  // namespace msbtree
