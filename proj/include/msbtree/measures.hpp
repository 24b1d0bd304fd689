#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msbtree/error.hpp"
#include "msbtree/matrix.hpp"

namespace msbtree {

using Point = std::vector<double>;

inline constexpr double kNormalizationTolerance = 1e-12;

/// Divides a nonnegative vector by its sum. Throws ValidationError naming the
/// first negative or non-finite index, or when every entry is zero.
inline std::vector<double> normalize(std::span<const double> weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw ValidationError("weight at index " + std::to_string(i) +
                            " is negative or not finite");
    total += weights[i];
  }
  if (!(total > 0.0)) throw ValidationError("weights are all zero (index 0 onward)");
  std::vector<double> out(weights.begin(), weights.end());
  for (auto& w : out) w /= total;
  return out;
}

/// A probability vector on a finite set of points in R^d.
///
/// Zero-weight points are kept so indices line up with the caller's input;
/// use pruned() to drop them.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<Point> support, std::vector<double> weights)
      : support_(std::move(support)), weights_(std::move(weights)) {
    validate();
  }

  /// Normalizes raw nonnegative masses before validating.
  static DiscreteMeasure from_masses(std::vector<Point> support, std::span<const double> masses) {
    return DiscreteMeasure(std::move(support), normalize(masses));
  }

  /// Uniform weights 1/n on the given points.
  static DiscreteMeasure uniform(std::vector<Point> support) {
    const std::size_t n = support.size();
    if (n == 0) throw ValidationError("empty support");
    return DiscreteMeasure(std::move(support), std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static DiscreteMeasure dirac(Point at) { return DiscreteMeasure({std::move(at)}, {1.0}); }

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dimension() const noexcept { return support_.front().size(); }
  const std::vector<Point>& support() const noexcept { return support_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  const Point& point(std::size_t i) const { return support_[i]; }

  bool has_zero_weights() const {
    return std::any_of(weights_.begin(), weights_.end(), [](double w) { return w == 0.0; });
  }

  DiscreteMeasure pruned() const {
    std::vector<Point> pts;
    std::vector<double> ws;
    for (std::size_t i = 0; i < size(); ++i) {
      if (weights_[i] > 0.0) {
        pts.push_back(support_[i]);
        ws.push_back(weights_[i]);
      }
    }
    return DiscreteMeasure::from_masses(std::move(pts), ws);
  }

  bool operator==(const DiscreteMeasure&) const = default;

 private:
  void validate() const {
    if (weights_.empty()) throw ValidationError("measure has empty support");
    if (support_.size() != weights_.size())
      throw ValidationError("support length " + std::to_string(support_.size()) +
                            " differs from weights length " + std::to_string(weights_.size()));
    const std::size_t d = support_.front().size();
    if (d == 0) throw ValidationError("support points must have dimension >= 1");
    double total = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (support_[i].size() != d)
        throw ValidationError("support point " + std::to_string(i) + " has dimension " +
                              std::to_string(support_[i].size()) + ", expected " + std::to_string(d));
      for (double x : support_[i])
        if (!std::isfinite(x))
          throw ValidationError("support point " + std::to_string(i) + " is not finite");
      if (!std::isfinite(weights_[i]) || weights_[i] < 0.0)
        throw ValidationError("weight at index " + std::to_string(i) + " is negative or not finite");
      total += weights_[i];
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance)
      throw ValidationError("weights sum to " + std::to_string(total) + ", expected 1");
  }

  std::vector<Point> support_;
  std::vector<double> weights_;
};

/// Shannon entropy -sum p log p, with 0 log 0 taken as 0.
inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

inline double entropy(const DiscreteMeasure& m) { return entropy(m.weights()); }

/// The s >= 2 vertices of the problem. Supports may differ in size, not in dimension.
class MeasureCollection {
 public:
  explicit MeasureCollection(std::vector<DiscreteMeasure> measures) : measures_(std::move(measures)) {
    if (measures_.size() < 2)
      throw ValidationError("need at least 2 measures, got " + std::to_string(measures_.size()));
    const std::size_t d = measures_.front().dimension();
    for (std::size_t k = 1; k < measures_.size(); ++k)
      if (measures_[k].dimension() != d)
        throw ValidationError("measure " + std::to_string(k + 1) + " has dimension " +
                              std::to_string(measures_[k].dimension()) + ", expected " +
                              std::to_string(d));
  }

  std::size_t size() const noexcept { return measures_.size(); }
  std::size_t dimension() const noexcept { return measures_.front().dimension(); }
  const DiscreteMeasure& operator[](std::size_t k) const { return measures_[k]; }
  auto begin() const noexcept { return measures_.begin(); }
  auto end() const noexcept { return measures_.end(); }

  std::vector<std::size_t> shape() const {
    std::vector<std::size_t> out;
    for (const auto& m : measures_) out.push_back(m.size());
    return out;
  }

  std::vector<double> entropies() const {
    std::vector<double> out;
    for (const auto& m : measures_) out.push_back(entropy(m));
    return out;
  }

  MeasureCollection pruned() const {
    std::vector<DiscreteMeasure> out;
    for (const auto& m : measures_) out.push_back(m.pruned());
    return MeasureCollection(std::move(out));
  }

 private:
  std::vector<DiscreteMeasure> measures_;
};

struct GmmComponent {
  double mean = 0.0;
  double stddev = 1.0;
  double weight = 1.0;
};

struct Interval {
  double lo = -10.0;
  double hi = 10.0;
};

/// Draws n points from a 1-d Gaussian mixture restricted to [lo, hi] and
/// returns their empirical (uniform-weight) measure. Out-of-range draws are
/// rejected; after 1000 rejections the last draw is clamped.
inline DiscreteMeasure sample_gmm(std::span<const GmmComponent> components, std::size_t n,
                                  Interval interval, std::mt19937_64& rng) {
  if (components.empty()) throw ValidationError("gaussian mixture has no components");
  if (n == 0) throw ValidationError("sample count must be >= 1");
  if (!(interval.lo < interval.hi)) throw ValidationError("interval must satisfy a < b");
  std::vector<double> mix;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    if (!(c.stddev > 0.0) || !std::isfinite(c.mean))
      throw ValidationError("component " + std::to_string(k) + " needs finite mean and stddev > 0");
    mix.push_back(c.weight);
  }
  const auto probs = normalize(mix);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());

  constexpr int kMaxRejections = 1000;
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0;
    for (int attempt = 0; attempt <= kMaxRejections; ++attempt) {
      const auto& c = components[pick(rng)];
      x = std::normal_distribution<double>(c.mean, c.stddev)(rng);
      if (x >= interval.lo && x <= interval.hi) break;
    }
    pts.push_back({std::clamp(x, interval.lo, interval.hi)});
  }
  return DiscreteMeasure::uniform(std::move(pts));
}

inline DiscreteMeasure sample_gmm(std::span<const GmmComponent> components, std::size_t n,
                                  Interval interval, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_gmm(components, n, interval, rng);
}

/// Grayscale grid to measure: one support point (row, col) per positive pixel,
/// intensities normalized to sum 1.
inline DiscreteMeasure image_to_measure(const Matrix<double>& image) {
  std::vector<Point> pts;
  std::vector<double> mass;
  for (std::size_t r = 0; r < image.rows(); ++r) {
    for (std::size_t c = 0; c < image.cols(); ++c) {
      const double v = image(r, c);
      if (!std::isfinite(v) || v < 0.0)
        throw ValidationError("pixel (" + std::to_string(r) + ", " + std::to_string(c) +
                              ") is negative or not finite");
      if (v > 0.0) {
        pts.push_back({static_cast<double>(r), static_cast<double>(c)});
        mass.push_back(v);
      }
    }
  }
  if (pts.empty()) throw ValidationError("image has no positive pixel");
  return DiscreteMeasure::from_masses(std::move(pts), mass);
}

}  // namespace msbtree
