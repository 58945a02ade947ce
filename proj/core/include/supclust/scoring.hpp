#pragma once

#include <span>
#include <vector>

#include "supclust/clustering.hpp"
#include "supclust/common.hpp"
#include "supclust/dataset.hpp"

namespace supclust {

/// Scores smaller than this denominator are clamped to kScoreCeiling so that
/// duplicated points never produce Inf.
inline constexpr double kDegenerateDistance = 1e-12;
inline constexpr double kScoreCeiling = 1e12;

/// One positive, finite score per subject sample.
struct ScoreVector {
  std::vector<Index> subject_indices;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Softmax weights from one cluster to every other cluster.
struct ClusterWeights {
  ClusterId source_cluster = 0;
  double temperature = 1.0;
  /// Dense over all clusters; the entry for source_cluster is 0.
  std::vector<double> weights;

  double weight(ClusterId cluster) const { return weights.at(cluster); }
};

/// Inverse mean distance to the K nearest neighbors inside `neighbor_pool`.
///
/// A subject that is itself part of the pool is never counted as its own
/// neighbor. Neighbors tied at the K-th distance are taken in ascending index
/// order. Throws kArgument for K == 0, duplicate subjects, out-of-range
/// indices, or a pool with fewer than K candidates for some subject.
ScoreVector typicality(const EmbeddingSet& data, std::span<const Index> subject_indices,
                       std::span<const Index> neighbor_pool, std::size_t k);

/// w[j] = exp(-|c_i - c_j| / T) / sum_{l != i} exp(-|c_i - c_l| / T).
ClusterWeights cluster_weights(const Matrix& centers, ClusterId source, double temperature);

/// Inverse weighted mean distance from each subject to the other clusters'
/// centers. Higher means closer to the weighted inter-cluster boundary.
/// `weights` must have been computed for `source`, the subjects' cluster.
ScoreVector sup_score(const EmbeddingSet& data, std::span<const Index> subject_indices,
                      const Matrix& centers, ClusterId source, const ClusterWeights& weights);

}  // namespace supclust
