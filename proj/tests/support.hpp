#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "msbtree/msbtree.hpp"

namespace msbtree::fixtures {

inline std::vector<Point> random_points(std::size_t n, std::size_t dim, std::mt19937_64& rng, double lo = -10.0,
                                        double hi = 10.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Point> pts(n, Point(dim));
  for (auto& p : pts)
    for (auto& x : p) x = u(rng);
  return pts;
}

inline DiscreteMeasure random_measure(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.1, 1.0);
  std::vector<double> masses(n);
  for (auto& m : masses) m = w(rng);
  return DiscreteMeasure::from_masses(random_points(n, dim, rng), masses);
}

inline MeasureCollection random_collection(std::size_t s, std::size_t n_lo, std::size_t n_hi, std::mt19937_64& rng,
                                           std::size_t dim = 2) {
  std::uniform_int_distribution<std::size_t> n(n_lo, n_hi);
  std::vector<DiscreteMeasure> ms;
  for (std::size_t k = 0; k < s; ++k) ms.push_back(random_measure(n(rng), dim, rng));
  return MeasureCollection(std::move(ms));
}

inline PruferCode random_code(std::size_t s, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> label(1, s);
  PruferCode code;
  for (std::size_t k = 0; k + 2 < s; ++k) code.labels.push_back(label(rng));
  return code;
}

inline SpanningTree random_tree(std::size_t s, std::mt19937_64& rng) { return prufer_decode(random_code(s, rng), s); }

// Symmetric weights, all off-diagonal entries distinct.
inline Matrix<double> random_weights(std::size_t s, std::mt19937_64& rng) {
  std::vector<double> vals(s * (s - 1) / 2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (auto& v : vals) v = u(rng);
  Matrix<double> w(s, s, 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j) w(i, j) = w(j, i) = vals[k++];
  return w;
}

}  // namespace msbtree::fixtures
