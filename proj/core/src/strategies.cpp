#include "supclust/strategies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "supclust/random.hpp"
#include "supclust/scoring.hpp"

namespace supclust {

namespace {

struct StrategyName {
  StrategyKind kind;
  std::string_view name;
};

constexpr std::array<StrategyName, 10> kNames = {{
    {StrategyKind::kSupClust, "supclust"},
    {StrategyKind::kSupClustNoSup, "supclust-no-sup"},
    {StrategyKind::kSupClustNoTypicality, "supclust-no-typicality"},
    {StrategyKind::kTypiClustRp, "typiclust-rp"},
    {StrategyKind::kRandom, "random"},
    {StrategyKind::kCoreset, "coreset"},
    {StrategyKind::kProbCover, "probcover"},
    {StrategyKind::kMargin, "margin"},
    {StrategyKind::kEntropy, "entropy"},
    {StrategyKind::kLeastConfidence, "least-confidence"},
}};

// Stream tags for derive_seed.
constexpr std::uint64_t kShortlistStream = 1;

void check_budget(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget) {
  if (budget == 0) fail(ErrorKind::kArgument, "budget must be at least 1");
  pool.validate(data.size());
  if (pool.size() + budget > data.size()) {
    fail(ErrorKind::kBudgetExhausted,
         "budget " + std::to_string(budget) + " exceeds the " +
             std::to_string(data.size() - pool.size()) + " unlabeled samples left");
  }
}

std::vector<Index> unlabeled_indices(Index n, const LabeledPool& pool) {
  std::vector<Index> out;
  out.reserve(n - pool.size());
  for (Index i = 0; i < n; ++i) {
    if (!pool.contains(i)) out.push_back(i);
  }
  return out;
}

enum class ClusterPick { kHighestSup, kRandomTypical, kMostTypical };

struct Candidate {
  Index index;
  std::optional<double> typicality;
};

QueryResult cluster_pipeline(const EmbeddingSet& data, const LabeledPool& pool,
                             std::size_t budget, const StrategyConfig& config,
                             double filter_fraction, ClusterPick pick) {
  config.validate();
  check_budget(data, pool, budget);

  const std::size_t num_clusters = pool.size() + budget;
  const Clustering clustering = kmeans(data, num_clusters, config.seed, config.kmeans);
  // Full preference order; clusters left without unlabeled members are skipped.
  const auto order = select_target_clusters(clustering, pool, num_clusters);

  std::vector<Index> everyone;
  if (config.neighbor_scope == NeighborScope::kGlobal) {
    everyone.resize(data.size());
    std::iota(everyone.begin(), everyone.end(), Index{0});
  }

  Rng rng(derive_seed(config.seed, kShortlistStream));
  QueryResult result;
  for (const ClusterId cluster : order) {
    if (result.selected.size() == budget) break;
    const auto members = clustering.members(cluster);
    std::vector<Index> open;
    for (const Index i : members) {
      if (!pool.contains(i)) open.push_back(i);
    }
    if (open.empty()) continue;

    const std::vector<Index>& neighbors =
        config.neighbor_scope == NeighborScope::kGlobal ? everyone : members;
    const std::size_t k = std::min(config.typicality_k, neighbors.size() - 1);

    std::vector<Candidate> candidates;
    candidates.reserve(open.size());
    if (k > 0) {
      const auto typ = typicality(data, open, neighbors, k);
      for (std::size_t t = 0; t < open.size(); ++t) candidates.push_back({open[t], typ.values[t]});
      std::stable_sort(candidates.begin(), candidates.end(),
                       [](const Candidate& a, const Candidate& b) { return *a.typicality > *b.typicality; });
    } else {
      for (const Index i : open) candidates.push_back({i, std::nullopt});
    }
    candidates.resize(shortlist_size(filter_fraction, candidates.size()));

    SampleTrace trace{cluster, std::nullopt, std::nullopt};
    std::size_t chosen = 0;
    if (pick == ClusterPick::kRandomTypical) {
      chosen = static_cast<std::size_t>(rng.below(candidates.size()));
    } else if (pick == ClusterPick::kHighestSup && num_clusters >= 2) {
      const auto weights = cluster_weights(clustering.centers, cluster, config.temperature);
      std::vector<Index> shortlist;
      for (const auto& c : candidates) shortlist.push_back(c.index);
      const auto sup = sup_score(data, shortlist, clustering.centers, cluster, weights);
      // Candidates are already in (typicality desc, index asc) order, so the
      // first strict maximum wins every tie the right way.
      for (std::size_t t = 1; t < sup.size(); ++t) {
        if (sup.values[t] > sup.values[chosen]) chosen = t;
      }
      trace.sup = sup.values[chosen];
    }
    // kMostTypical, and SUP with a single cluster, take the head of the list.
    trace.typicality = candidates[chosen].typicality;
    result.selected.push_back(candidates[chosen].index);
    result.trace.push_back(trace);
  }
  return result;
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  for (const auto& entry : kNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  std::string normalized(name);
  std::replace(normalized.begin(), normalized.end(), '_', '-');
  for (const auto& entry : kNames) {
    if (entry.name == normalized) return entry.kind;
  }
  fail(ErrorKind::kConfiguration, "unknown strategy '" + std::string(name) + "'");
}

const std::vector<StrategyKind>& all_strategies() {
  static const std::vector<StrategyKind> kinds = [] {
    std::vector<StrategyKind> out;
    for (const auto& entry : kNames) out.push_back(entry.kind);
    return out;
  }();
  return kinds;
}

bool is_uncertainty_strategy(StrategyKind kind) {
  return kind == StrategyKind::kMargin || kind == StrategyKind::kEntropy ||
         kind == StrategyKind::kLeastConfidence;
}

void StrategyConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail(ErrorKind::kConfiguration, "temperature must be positive and finite");
  }
  if (!(filter_fraction > 0.0 && filter_fraction <= 1.0)) {
    fail(ErrorKind::kConfiguration, "filter fraction must lie in (0, 1]");
  }
  if (typicality_k == 0) fail(ErrorKind::kConfiguration, "typicality K must be at least 1");
  if (probcover_radius && (!(*probcover_radius > 0.0) || !std::isfinite(*probcover_radius))) {
    fail(ErrorKind::kConfiguration, "probcover radius must be positive and finite");
  }
}

std::size_t shortlist_size(double filter_fraction, std::size_t cluster_size) {
  // The slack keeps e.g. 0.1 * 30 = 3.0000000000000004 from rounding up to 4.
  const double raw = std::ceil(filter_fraction * static_cast<double>(cluster_size) - 1e-9);
  const auto n = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::min(n, std::max<std::size_t>(cluster_size, 1));
}

QueryResult supclust_query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget,
                           const StrategyConfig& config) {
  return cluster_pipeline(data, pool, budget, config, config.filter_fraction,
                          ClusterPick::kHighestSup);
}

QueryResult supclust_no_sup_query(const EmbeddingSet& data, const LabeledPool& pool,
                                  std::size_t budget, const StrategyConfig& config) {
  return cluster_pipeline(data, pool, budget, config, config.filter_fraction,
                          ClusterPick::kRandomTypical);
}

QueryResult supclust_no_typicality_query(const EmbeddingSet& data, const LabeledPool& pool,
                                         std::size_t budget, const StrategyConfig& config) {
  return cluster_pipeline(data, pool, budget, config, 1.0, ClusterPick::kHighestSup);
}

QueryResult typiclust_rp_query(const EmbeddingSet& data, const LabeledPool& pool,
                               std::size_t budget, const StrategyConfig& config) {
  return cluster_pipeline(data, pool, budget, config, config.filter_fraction,
                          ClusterPick::kMostTypical);
}

QueryResult random_query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget,
                         std::uint64_t seed) {
  check_budget(data, pool, budget);
  auto open = unlabeled_indices(data.size(), pool);
  Rng rng(seed);
  for (std::size_t i = 0; i < budget; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(open.size() - i));
    std::swap(open[i], open[j]);
  }
  open.resize(budget);
  return {std::move(open), {}};
}

QueryResult coreset_query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget) {
  check_budget(data, pool, budget);
  const Index n = data.size();
  std::vector<double> gap(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  const auto absorb = [&](Index center) {
    taken[center] = true;
    const auto c = data.point(center);
    for (Index i = 0; i < n; ++i) gap[i] = std::min(gap[i], squared_euclidean(data.point(i), c));
  };
  for (const Index l : pool.indices()) absorb(l);

  QueryResult result;
  for (std::size_t step = 0; step < budget; ++step) {
    Index best = n;
    for (Index i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || gap[i] > gap[best]) best = i;
    }
    result.selected.push_back(best);
    absorb(best);
  }
  return result;
}

QueryResult probcover_query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget,
                            double radius) {
  check_budget(data, pool, budget);
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    fail(ErrorKind::kConfiguration, "probcover radius must be finite and non-negative");
  }
  const Index n = data.size();
  const double r2 = radius * radius;
  // Closed-ball neighborhoods in CSR form.
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<Index> neighbors;
  for (Index i = 0; i < n; ++i) {
    const auto p = data.point(i);
    for (Index j = 0; j < n; ++j) {
      if (squared_euclidean(p, data.point(j)) <= r2) neighbors.push_back(j);
    }
    offsets[i + 1] = neighbors.size();
  }
  const auto ball = [&](Index i) {
    return std::span<const Index>(neighbors.data() + offsets[i], offsets[i + 1] - offsets[i]);
  };

  std::vector<bool> covered(n, false);
  for (const Index l : pool.indices()) {
    for (const Index v : ball(l)) covered[v] = true;
  }
  std::vector<std::size_t> gain(n, 0);
  for (Index i = 0; i < n; ++i) {
    for (const Index v : ball(i)) gain[i] += covered[v] ? 0 : 1;
  }
  std::vector<bool> taken(n, false);
  for (const Index l : pool.indices()) taken[l] = true;

  QueryResult result;
  for (std::size_t step = 0; step < budget; ++step) {
    Index best = n;
    for (Index i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || gain[i] > gain[best]) best = i;
    }
    taken[best] = true;
    result.selected.push_back(best);
    for (const Index v : ball(best)) {
      if (covered[v]) continue;
      covered[v] = true;
      // Balls are symmetric, so ball(v) is exactly the set whose gain counted v.
      for (const Index w : ball(v)) --gain[w];
    }
  }
  return result;
}

QueryResult uncertainty_query(StrategyKind kind, const Probabilities* probabilities,
                              const LabeledPool& pool, std::size_t budget) {
  if (!is_uncertainty_strategy(kind)) {
    fail(ErrorKind::kArgument, std::string(to_string(kind)) + " is not an uncertainty strategy");
  }
  if (probabilities == nullptr) {
    fail(ErrorKind::kMissingModel, "no trained model: strategy " + std::string(to_string(kind)) +
                                       " needs class probabilities");
  }
  const Probabilities& probs = *probabilities;
  const auto n = static_cast<Index>(probs.rows());
  if (n == 0 || probs.cols() == 0) fail(ErrorKind::kValidation, "probability matrix is empty");
  if (budget == 0) fail(ErrorKind::kArgument, "budget must be at least 1");
  pool.validate(n);
  if (pool.size() + budget > n) {
    fail(ErrorKind::kBudgetExhausted, "budget exceeds the unlabeled samples left");
  }

  std::vector<std::pair<double, Index>> ranked;
  ranked.reserve(n - pool.size());
  for (Index i = 0; i < n; ++i) {
    const auto row = row_span(probs, i);
    CompensatedSum total;
    for (const double p : row) {
      if (!std::isfinite(p) || p < 0.0) {
        fail(ErrorKind::kValidation, "invalid probability in row " + std::to_string(i));
      }
      total.add(p);
    }
    if (std::abs(total.value() - 1.0) > 1e-6) {
      fail(ErrorKind::kValidation, "probability row " + std::to_string(i) + " does not sum to 1");
    }
    if (pool.contains(i)) continue;

    double urgency = 0.0;  // higher = more uncertain
    if (kind == StrategyKind::kEntropy) {
      for (const double p : row) {
        if (p > 0.0) urgency -= p * std::log(p);
      }
    } else {
      double first = 0.0, second = 0.0;
      for (const double p : row) {
        if (p > first) {
          second = first;
          first = p;
        } else if (p > second) {
          second = p;
        }
      }
      urgency = kind == StrategyKind::kMargin ? -(first - second) : -first;
    }
    ranked.emplace_back(urgency, i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  QueryResult result;
  for (std::size_t t = 0; t < budget; ++t) result.selected.push_back(ranked[t].second);
  return result;
}

double median_nn_distance(const EmbeddingSet& data) {
  const Index n = data.size();
  if (n < 2) fail(ErrorKind::kArgument, "nearest-neighbor distance needs at least two samples");
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d = euclidean(data.point(i), data.point(j));
      nearest[i] = std::min(nearest[i], d);
      nearest[j] = std::min(nearest[j], d);
    }
  }
  std::sort(nearest.begin(), nearest.end());
  return n % 2 == 1 ? nearest[n / 2] : 0.5 * (nearest[n / 2 - 1] + nearest[n / 2]);
}

QueryResult query(const EmbeddingSet& data, const LabeledPool& pool, std::size_t budget,
                  const StrategyConfig& config, const Probabilities* probabilities) {
  config.validate();
  switch (config.kind) {
    case StrategyKind::kSupClust: return supclust_query(data, pool, budget, config);
    case StrategyKind::kSupClustNoSup: return supclust_no_sup_query(data, pool, budget, config);
    case StrategyKind::kSupClustNoTypicality:
      return supclust_no_typicality_query(data, pool, budget, config);
    case StrategyKind::kTypiClustRp: return typiclust_rp_query(data, pool, budget, config);
    case StrategyKind::kRandom: return random_query(data, pool, budget, config.seed);
    case StrategyKind::kCoreset: return coreset_query(data, pool, budget);
    case StrategyKind::kProbCover: {
      check_budget(data, pool, budget);
      const double radius =
          config.probcover_radius ? *config.probcover_radius : median_nn_distance(data);
      return probcover_query(data, pool, budget, radius);
    }
    case StrategyKind::kMargin:
    case StrategyKind::kEntropy:
    case StrategyKind::kLeastConfidence:
      if (probabilities != nullptr && static_cast<Index>(probabilities->rows()) != data.size()) {
        fail(ErrorKind::kDimensionMismatch, "probability rows do not match the sample count");
      }
      return uncertainty_query(config.kind, probabilities, pool, budget);
  }
  fail(ErrorKind::kConfiguration, "unhandled strategy");
}

}  // namespace supclust
