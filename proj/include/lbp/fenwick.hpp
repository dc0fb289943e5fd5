#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lbp {

/// Binary indexed tree over nonnegative integer weights, supporting point
/// updates and weighted selection in O(log n).
class FenwickTree {
 public:
  FenwickTree() = default;
  explicit FenwickTree(std::size_t n) : tree_(n + 1, 0) {
    mask_ = 1;
    while (mask_ * 2 <= n) mask_ *= 2;
  }

  std::size_t size() const { return tree_.empty() ? 0 : tree_.size() - 1; }

  void add(std::size_t index, std::int64_t delta) {
    for (std::size_t i = index + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }

  /// Sum of weights [0, index).
  std::int64_t prefix(std::size_t index) const {
    std::int64_t s = 0;
    for (std::size_t i = index; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

  /// Smallest index i with prefix(i + 1) > target, for 0 <= target < total.
  std::size_t find(std::int64_t target) const {
    std::size_t pos = 0;
    for (std::size_t step = mask_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return pos;
  }

 private:
  std::vector<std::int64_t> tree_;
  std::size_t mask_ = 0;
};

}  // namespace lbp
