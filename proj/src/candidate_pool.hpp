#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "efs/rng.hpp"

namespace efs::detail {

// Unselected features. Both the covariance kernel and the serial reference go
// through this class so that identical streams produce identical candidate sets.
class CandidatePool {
 public:
  explicit CandidatePool(int p) : pool_(static_cast<std::size_t>(p)) {
    std::iota(pool_.begin(), pool_.end(), 0);
  }

  int size() const { return static_cast<int>(pool_.size()); }
  bool empty() const { return pool_.empty(); }

  // The first min(m, size) slots after the call are a uniform draw without replacement.
  std::span<const int> draw(int m, Engine* engine) {
    const int n = size();
    if (engine == nullptr || m >= n) return {pool_.data(), pool_.size()};
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(pool_[static_cast<std::size_t>(i)], pool_[static_cast<std::size_t>(pick(*engine))]);
    }
    return {pool_.data(), static_cast<std::size_t>(m)};
  }

  void remove(int feature) {
    auto it = std::find(pool_.begin(), pool_.end(), feature);
    if (it == pool_.end()) return;
    *it = pool_.back();
    pool_.pop_back();
  }

 private:
  std::vector<int> pool_;
};

}  // namespace efs::detail
