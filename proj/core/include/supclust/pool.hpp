#pragma once

#include <algorithm>
#include <initializer_list>
#include <span>
#include <vector>

#include "supclust/common.hpp"

namespace supclust {

/// Set of already-annotated sample indices, kept sorted and unique.
class LabeledPool {
 public:
  LabeledPool() = default;
  explicit LabeledPool(std::vector<Index> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  }
  LabeledPool(std::initializer_list<Index> indices)
      : LabeledPool(std::vector<Index>(indices)) {}

  bool contains(Index i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::span<const Index> indices() const { return indices_; }

  void add(std::span<const Index> more) {
    indices_.insert(indices_.end(), more.begin(), more.end());
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  }

  /// Throws kArgument unless every index is below `n`.
  void validate(Index n) const {
    if (!indices_.empty() && indices_.back() >= n) {
      fail(ErrorKind::kArgument, "labeled index " + std::to_string(indices_.back()) +
                                     " is out of range for " + std::to_string(n) + " samples");
    }
  }

 private:
  std::vector<Index> indices_;
};

}  // namespace supclust
