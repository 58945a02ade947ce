#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "supclust/clustering.hpp"
#include "supclust/common.hpp"
#include "supclust/dataset.hpp"
#include "supclust/pool.hpp"

namespace supclust {

enum class StrategyKind {
  kSupClust,
  kSupClustNoSup,
  kSupClustNoTypicality,
  kTypiClustRp,
  kRandom,
  kCoreset,
  kProbCover,
  kMargin,
  kEntropy,
  kLeastConfidence,
};

/// Kebab-case names as used on the command line ("typiclust-rp", ...).
std::string_view to_string(StrategyKind kind);
/// Accepts kebab-case or snake_case. Throws kConfiguration on unknown names.
StrategyKind parse_strategy(std::string_view name);
const std::vector<StrategyKind>& all_strategies();
bool is_uncertainty_strategy(StrategyKind kind);

/// Where typicality looks for neighbors.
enum class NeighborScope { kCluster, kGlobal };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kSupClust;
  double temperature = 1.0;
  std::size_t typicality_k = 20;
  double filter_fraction = 0.1;
  /// Unset means "median 1-NN distance of the data".
  std::optional<double> probcover_radius;
  std::uint64_t seed = 0;
  NeighborScope neighbor_scope = NeighborScope::kCluster;
  KMeansOptions kmeans;

  /// Throws kConfiguration on out-of-range hyperparameters.
  void validate() const;
};

struct SampleTrace {
  ClusterId cluster = 0;
  std::optional<double> typicality;  // absent for singleton clusters
  std::optional<double> sup;
};

struct QueryResult {
  std::vector<Index> selected;
  /// Filled by the clustering-based strategies, parallel to `selected`.
  std::vector<SampleTrace> trace;
};

/// n x C class probabilities from the current classifier.
using Probabilities = Matrix;

/// Runs the strategy named by `config.kind`. Uncertainty strategies need
/// `probabilities`; the others ignore it.
QueryResult query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget,
                  const StrategyConfig& config, const Probabilities* probabilities = nullptr);

/// Cluster into |pool| + budget groups, take the biggest clusters free of
/// labeled samples, keep each cluster's most typical members and pick the
/// one with the highest SUP.
QueryResult supclust_query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget,
                           const StrategyConfig& config);
/// As supclust_query, picking uniformly at random from the typical shortlist.
QueryResult supclust_no_sup_query(const EmbeddingSet& data, const LabeledPool& pool,
                                  std::size_t budget, const StrategyConfig& config);
/// As supclust_query without the typicality filter.
QueryResult supclust_no_typicality_query(const EmbeddingSet& data, const LabeledPool& pool,
                                         std::size_t budget, const StrategyConfig& config);
/// Most typical member of each target cluster.
QueryResult typiclust_rp_query(const EmbeddingSet& data, const LabeledPool& pool,
                               std::size_t budget, const StrategyConfig& config);

QueryResult random_query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget,
                         std::uint64_t seed);
/// Greedy k-center: repeatedly the point farthest from labeled + selected.
QueryResult coreset_query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget);
/// Greedy max coverage with closed balls of `radius`.
QueryResult probcover_query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget,
                            double radius);
QueryResult uncertainty_query(StrategyKind kind, const Probabilities* probabilities,
                              const LabeledPool& pool, std::size_t budget);

/// Median over samples of the distance to the nearest other sample.
double median_nn_distance(const EmbeddingSet& data);

/// Shortlist length for a cluster: ceil(fraction * size), at least 1.
std::size_t shortlist_size(double filter_fraction, std::size_t cluster_size);

}  // namespace supclust
