#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msbtree/error.hpp"
#include "msbtree/matrix.hpp"
#include "msbtree/measures.hpp"

namespace msbtree {

enum class CostKind { squared_euclidean, euclidean, custom };

inline const char* to_string(CostKind kind) {
  switch (kind) {
    case CostKind::squared_euclidean: return "sqeuclidean";
    case CostKind::euclidean: return "euclidean";
    case CostKind::custom: return "matrix";
  }
  return "unknown";
}

/// Nonnegative ground-cost matrix between two supports.
struct PairwiseCost {
  Matrix<double> matrix;
  CostKind kind = CostKind::custom;

  static PairwiseCost custom(Matrix<double> m) {
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double c = m.data()[k];
      if (!std::isfinite(c) || c < 0.0)
        throw ValidationError("cost entry (" + std::to_string(k / m.cols()) + ", " +
                              std::to_string(k % m.cols()) + ") is negative or not finite");
    }
    return {std::move(m), CostKind::custom};
  }

  PairwiseCost transposed() const { return {matrix.transposed(), kind}; }
};

inline double squared_distance(const Point& x, const Point& y) {
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = x[k] - y[k];
    d += t * t;
  }
  return d;
}

inline PairwiseCost build_cost(const DiscreteMeasure& m1, const DiscreteMeasure& m2, CostKind kind) {
  if (m1.dimension() != m2.dimension())
    throw ValidationError("cannot build cost between dimensions " + std::to_string(m1.dimension()) +
                          " and " + std::to_string(m2.dimension()));
  if (kind == CostKind::custom)
    throw ValidationError("custom costs must be supplied as a matrix, not built from supports");
  Matrix<double> c(m1.size(), m2.size());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    for (std::size_t j = 0; j < m2.size(); ++j) {
      const double d2 = squared_distance(m1.point(i), m2.point(j));
      c(i, j) = kind == CostKind::squared_euclidean ? d2 : std::sqrt(d2);
    }
  }
  return {std::move(c), kind};
}

/// K = exp(-C / eta). The exponent is kept as well: for small eta the kernel
/// underflows to zero long before the exponent stops being informative.
struct KernelMatrix {
  Matrix<double> values;
  Matrix<double> log_values;
  double eta = 1.0;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

inline KernelMatrix gibbs_kernel(const PairwiseCost& cost, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw ValidationError("eta must be positive and finite, got " + std::to_string(eta));
  KernelMatrix k{Matrix<double>(cost.matrix.rows(), cost.matrix.cols()),
                 Matrix<double>(cost.matrix.rows(), cost.matrix.cols()), eta};
  for (std::size_t idx = 0; idx < cost.matrix.size(); ++idx) {
    const double e = -cost.matrix.data()[idx] / eta;
    k.log_values.data()[idx] = e;
    k.values.data()[idx] = std::exp(e);
  }
  return k;
}

struct SinkhornOptions {
  double tol = 1e-9;
  std::size_t max_iter = 100000;
  bool record_history = false;
};

struct SinkhornReport {
  std::size_t iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<double> residual_history;  // one entry per sweep, when requested
};

/// Optimal plan K ⊙ (u ⊗ v) with log u, log v as the dual scalings. Entries
/// pruned for zero marginal mass carry log-scaling -inf and zero plan rows/columns.
struct BimarginalCoupling {
  Matrix<double> plan;
  std::vector<double> log_u;
  std::vector<double> log_v;
  SinkhornReport report;
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum exp(x)) over a strided range; -inf when every term is -inf.
template <typename Get>
double log_sum_exp(std::size_t count, Get&& get) {
  double hi = kNegInf;
  for (std::size_t k = 0; k < count; ++k) hi = std::max(hi, get(k));
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t k = 0; k < count; ++k) acc += std::exp(get(k) - hi);
  return hi + std::log(acc);
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  double tv = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) tv += std::abs(p[k] - q[k]);
  return 0.5 * tv;
}

inline std::vector<std::size_t> positive_indices(std::span<const double> w) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] > 0.0) idx.push_back(k);
  return idx;
}

}  // namespace detail

/// Log-domain bimarginal Sinkhorn with cyclic (row, column) updates.
///
/// Stops once max(TV(row sums, a), TV(column sums, b)) <= tol, measured after
/// each full sweep. On hitting max_iter the last iterate is returned with
/// converged == false. Zero-mass entries of a and b are pruned before solving.
inline BimarginalCoupling sinkhorn_solve(std::span<const double> a, std::span<const double> b,
                                         const KernelMatrix& kernel, const SinkhornOptions& opts = {}) {
  using detail::kNegInf;
  if (kernel.rows() != a.size() || kernel.cols() != b.size())
    throw ValidationError("kernel is " + std::to_string(kernel.rows()) + "x" +
                          std::to_string(kernel.cols()) + " but marginals have lengths " +
                          std::to_string(a.size()) + " and " + std::to_string(b.size()));
  if (!(opts.tol > 0.0)) throw ValidationError("tol must be > 0");
  if (opts.max_iter < 1) throw ValidationError("max_iter must be >= 1");

  const auto rows = detail::positive_indices(a);
  const auto cols = detail::positive_indices(b);
  if (rows.empty() || cols.empty()) throw ValidationError("marginal has no positive mass");
  const std::size_t n1 = rows.size();
  const std::size_t n2 = cols.size();

  Matrix<double> log_k(n1, n2);
  std::vector<double> pa(n1), pb(n2), log_a(n1), log_b(n2);
  for (std::size_t i = 0; i < n1; ++i) {
    pa[i] = a[rows[i]];
    log_a[i] = std::log(pa[i]);
    for (std::size_t j = 0; j < n2; ++j) log_k(i, j) = kernel.log_values(rows[i], cols[j]);
  }
  for (std::size_t j = 0; j < n2; ++j) {
    pb[j] = b[cols[j]];
    log_b[j] = std::log(pb[j]);
  }
  for (std::size_t i = 0; i < n1; ++i) {
    const double row_max = *std::max_element(log_k.row(i).begin(), log_k.row(i).end());
    if (row_max == kNegInf) throw NumericalError("kernel row " + std::to_string(rows[i]) + " is identically zero");
  }

  std::vector<double> f(n1, 0.0), g(n2, 0.0), row_sum(n1), col_sum(n2), col_max(n2);
  SinkhornReport report;

  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t i = 0; i < n1; ++i) {
      const auto lk = log_k.row(i);
      f[i] = log_a[i] - detail::log_sum_exp(n2, [&](std::size_t j) { return lk[j] + g[j]; });
    }
    std::fill(col_max.begin(), col_max.end(), kNegInf);
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j) col_max[j] = std::max(col_max[j], log_k(i, j) + f[i]);
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j) col_sum[j] += std::exp(log_k(i, j) + f[i] - col_max[j]);
    for (std::size_t j = 0; j < n2; ++j) g[j] = log_b[j] - (col_max[j] + std::log(col_sum[j]));

    std::fill(row_sum.begin(), row_sum.end(), 0.0);
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        const double m = std::exp(f[i] + log_k(i, j) + g[j]);
        row_sum[i] += m;
        col_sum[j] += m;
      }
    }
    report.iterations = it;
    report.residual = std::max(detail::total_variation(row_sum, pa), detail::total_variation(col_sum, pb));
    if (!std::isfinite(report.residual)) throw NumericalError("sinkhorn residual became non-finite");
    if (opts.record_history) report.residual_history.push_back(report.residual);
    if (report.residual <= opts.tol) {
      report.converged = true;
      break;
    }
  }

  BimarginalCoupling out;
  out.plan = Matrix<double>(a.size(), b.size(), 0.0);
  out.log_u.assign(a.size(), kNegInf);
  out.log_v.assign(b.size(), kNegInf);
  for (std::size_t i = 0; i < n1; ++i) out.log_u[rows[i]] = f[i];
  for (std::size_t j = 0; j < n2; ++j) out.log_v[cols[j]] = g[j];
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) out.plan(rows[i], cols[j]) = std::exp(f[i] + log_k(i, j) + g[j]);
  out.report = std::move(report);
  return out;
}

inline BimarginalCoupling sinkhorn_solve(const DiscreteMeasure& m1, const DiscreteMeasure& m2,
                                         const PairwiseCost& cost, double eta,
                                         const SinkhornOptions& opts = {}) {
  if (cost.matrix.rows() != m1.size() || cost.matrix.cols() != m2.size())
    throw ValidationError("cost matrix is " + std::to_string(cost.matrix.rows()) + "x" +
                          std::to_string(cost.matrix.cols()) + " but supports have sizes " +
                          std::to_string(m1.size()) + " and " + std::to_string(m2.size()));
  return sinkhorn_solve(m1.weights(), m2.weights(), gibbs_kernel(cost, eta), opts);
}

/// D_KL(P || Q) = sum P log(P / Q), 0 log 0 = 0. Throws NumericalError if the
/// divergence is infinite (P > 0 where Q = 0).
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw ValidationError("kl_divergence shape mismatch: " + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()));
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0.0 || q[k] < 0.0) throw ValidationError("kl_divergence needs nonnegative arrays");
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0)
      throw NumericalError("kl_divergence is infinite: P > 0 where Q = 0 at index " + std::to_string(k));
    kl += p[k] * std::log(p[k] / q[k]);
  }
  return kl;
}

/// Bimarginal SB value D_KL(plan || K). K is unnormalized, so this can be negative.
/// Evaluated against log K so it stays finite where K underflows.
inline double sb_value(const Matrix<double>& plan, const KernelMatrix& kernel) {
  if (plan.rows() != kernel.rows() || plan.cols() != kernel.cols())
    throw ValidationError("sb_value shape mismatch");
  double v = 0.0;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const double m = plan.data()[k];
    if (m > 0.0) v += m * (std::log(m) - kernel.log_values.data()[k]);
  }
  return v;
}

inline double sb_value(const BimarginalCoupling& coupling, const KernelMatrix& kernel) {
  return sb_value(coupling.plan, kernel);
}

// <C, M>: the unregularized transport cost, reported for epsilon-accuracy diagnostics.
inline double transport_cost(const Matrix<double>& plan, const PairwiseCost& cost) {
  double v = 0.0;
  for (std::size_t k = 0; k < plan.size(); ++k) v += plan.data()[k] * cost.matrix.data()[k];
  return v;
}

inline std::vector<double> row_sums(const Matrix<double>& m) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (double x : m.row(i)) out[i] += x;
  return out;
}

inline std::vector<double> col_sums(const Matrix<double>& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j);
  return out;
}

}  // namespace msbtree
