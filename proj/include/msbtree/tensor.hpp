#pragma once

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msbtree/error.hpp"

namespace msbtree {

inline constexpr std::size_t kDefaultTensorCap = 10'000'000;

/// Product of the shape, refusing anything above `cap` (and overflow).
inline std::size_t checked_entry_count(std::span<const std::size_t> shape, std::size_t cap) {
  std::size_t n = 1;
  for (std::size_t len : shape) {
    if (len == 0) throw ValidationError("tensor axis of length 0");
    if (n > std::numeric_limits<std::size_t>::max() / len || n * len > cap)
      throw CapacityError("dense tensor would exceed the cap of " + std::to_string(cap) + " entries");
    n *= len;
  }
  return n;
}

/// Row-major s-way array; the last axis varies fastest.
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(std::vector<std::size_t> shape, std::size_t cap = kDefaultTensorCap, double fill = 0.0)
      : shape_(std::move(shape)) {
    data_.assign(checked_entry_count(shape_, cap), fill);
    strides_.assign(shape_.size(), 1);
    for (std::size_t k = shape_.size(); k-- > 1;) strides_[k - 1] = strides_[k] * shape_[k];
  }

  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::size_t offset(std::span<const std::size_t> index) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < index.size(); ++k) off += index[k] * strides_[k];
    return off;
  }
  double& operator[](std::span<const std::size_t> index) { return data_[offset(index)]; }
  double operator[](std::span<const std::size_t> index) const { return data_[offset(index)]; }
  double& at(std::initializer_list<std::size_t> index) { return data_[offset({index.begin(), index.size()})]; }
  double at(std::initializer_list<std::size_t> index) const {
    return data_[offset({index.begin(), index.size()})];
  }

  double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

 private:
  std::vector<std::size_t> shape_;
  std::vector<std::size_t> strides_;
  std::vector<double> data_;
};

using CouplingTensor = DenseTensor;

/// Odometer over all multi-indices of a shape, in row-major order.
class MultiIndex {
 public:
  explicit MultiIndex(std::vector<std::size_t> shape) : shape_(std::move(shape)), idx_(shape_.size(), 0) {}

  const std::vector<std::size_t>& operator*() const noexcept { return idx_; }
  std::size_t operator[](std::size_t k) const { return idx_[k]; }

  // Advances; returns false after the last index.
  bool next() {
    for (std::size_t k = shape_.size(); k-- > 0;) {
      if (++idx_[k] < shape_[k]) return true;
      idx_[k] = 0;
    }
    return false;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<std::size_t> idx_;
};

}  // namespace msbtree
