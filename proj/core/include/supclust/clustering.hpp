#pragma once

#include <cstdint>
#include <vector>

#include "supclust/common.hpp"
#include "supclust/dataset.hpp"
#include "supclust/pool.hpp"

namespace supclust {

using ClusterId = std::size_t;

/// Partition of the samples into N non-empty clusters.
struct Clustering {
  std::vector<ClusterId> assignment;  // one entry per sample
  Matrix centers;                     // N x d
  std::vector<std::size_t> sizes;     // members per cluster, all >= 1

  /// Objective (sum of squared distances to assigned centers) after each
  /// assignment pass. Non-increasing.
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;

  std::size_t num_clusters() const { return sizes.size(); }
  std::vector<Index> members(ClusterId cluster) const;
};

struct KMeansOptions {
  std::size_t max_iters = 300;
  double tol = 1e-6;
};

/// Lloyd's k-means with k-means++ seeding.
///
/// Each pass assigns every point to its nearest center (ties keep the
/// current cluster, otherwise the lowest cluster id) and then moves every
/// center to its members' mean. Once the largest center shift drops below
/// `tol` the next assignment pass is used as a confirmation: if it moves no
/// point the result is a fixed point and the loop stops. A cluster that ends
/// up empty is reseeded with the member of the largest cluster farthest from
/// that cluster's center.
Clustering kmeans(const EmbeddingSet& data, std::size_t num_clusters, std::uint64_t seed,
                  const KMeansOptions& options = {});

/// Sum of squared distances of every sample to its assigned center.
double kmeans_objective(const EmbeddingSet& data, const Clustering& clustering);

/// Picks the `count` clusters to query from. Clusters without any labeled
/// sample come first, biggest first; if there are fewer than `count` of them
/// the remainder is filled with the biggest covered clusters. Ties go to the
/// lower cluster id.
std::vector<ClusterId> select_target_clusters(const Clustering& clustering,
                                              const LabeledPool& pool, std::size_t count);

}  // namespace supclust
