#include "supclust/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "supclust/random.hpp"

namespace supclust {

namespace {

constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

Matrix seed_centers(const EmbeddingSet& data, std::size_t k, Rng& rng) {
  const Index n = data.size();
  Matrix centers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(data.dim()));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);

  Index pick = static_cast<Index>(rng.below(n));
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      CompensatedSum total;
      for (Index i = 0; i < n; ++i) total.add(nearest[i]);
      const double mass = total.value();
      if (mass > 0.0) {
        const double target = rng.uniform() * mass;
        double running = 0.0;
        pick = kUnassigned;
        Index last_positive = kUnassigned;
        for (Index i = 0; i < n; ++i) {
          if (nearest[i] <= 0.0) continue;
          last_positive = i;
          running += nearest[i];
          if (running > target) {
            pick = i;
            break;
          }
        }
        if (pick == kUnassigned) pick = last_positive;
      } else {
        // Every point coincides with a center already; draw among the rest.
        const auto remaining = static_cast<std::uint64_t>(std::count(chosen.begin(), chosen.end(), false));
        auto skip = rng.below(remaining);
        for (Index i = 0; i < n; ++i) {
          if (chosen[i]) continue;
          if (skip-- == 0) {
            pick = i;
            break;
          }
        }
      }
    }
    chosen[pick] = true;
    const auto p = data.point(pick);
    for (Index k2 = 0; k2 < p.size(); ++k2) centers(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k2)) = p[k2];
    const auto center = row_span(centers, c);
    for (Index i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_euclidean(data.point(i), center));
    }
  }
  return centers;
}

// Returns the number of points whose cluster changed.
std::size_t assign_pass(const EmbeddingSet& data, const Matrix& centers,
                        std::vector<ClusterId>& assignment) {
  std::size_t moved = 0;
  const auto k = static_cast<std::size_t>(centers.rows());
  for (Index i = 0; i < data.size(); ++i) {
    const auto p = data.point(i);
    ClusterId best = assignment[i];
    double best_d = best == kUnassigned ? std::numeric_limits<double>::infinity()
                                        : squared_euclidean(p, row_span(centers, best));
    for (ClusterId c = 0; c < k; ++c) {
      const double d = squared_euclidean(p, row_span(centers, c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best != assignment[i]) {
      assignment[i] = best;
      ++moved;
    }
  }
  return moved;
}

std::vector<std::size_t> count_sizes(const std::vector<ClusterId>& assignment, std::size_t k) {
  std::vector<std::size_t> sizes(k, 0);
  for (const auto c : assignment) ++sizes[c];
  return sizes;
}

// Gives every empty cluster the member of the largest cluster farthest from
// that cluster's center. Returns the number of points moved.
std::size_t repair_empty(const EmbeddingSet& data, Matrix& centers,
                         std::vector<ClusterId>& assignment, std::vector<std::size_t>& sizes) {
  std::size_t moved = 0;
  for (ClusterId empty = 0; empty < sizes.size(); ++empty) {
    if (sizes[empty] != 0) continue;
    const auto largest = static_cast<ClusterId>(
        std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    const auto largest_center = row_span(centers, largest);
    Index far = kUnassigned;
    double far_d = -1.0;
    for (Index i = 0; i < data.size(); ++i) {
      if (assignment[i] != largest) continue;
      const double d = squared_euclidean(data.point(i), largest_center);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    assignment[far] = empty;
    --sizes[largest];
    ++sizes[empty];
    const auto p = data.point(far);
    for (Index k = 0; k < p.size(); ++k) centers(static_cast<Eigen::Index>(empty), static_cast<Eigen::Index>(k)) = p[k];
    ++moved;
  }
  return moved;
}

Matrix member_means(const EmbeddingSet& data, const std::vector<ClusterId>& assignment,
                    const std::vector<std::size_t>& sizes) {
  Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(sizes.size()),
                             static_cast<Eigen::Index>(data.dim()));
  for (Index i = 0; i < data.size(); ++i) {
    sums.row(static_cast<Eigen::Index>(assignment[i])) +=
        data.embeddings().row(static_cast<Eigen::Index>(i));
  }
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    sums.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);
  }
  return sums;
}

double objective_of(const EmbeddingSet& data, const Matrix& centers,
                    const std::vector<ClusterId>& assignment) {
  CompensatedSum total;
  for (Index i = 0; i < data.size(); ++i) {
    total.add(squared_euclidean(data.point(i), row_span(centers, assignment[i])));
  }
  return total.value();
}

}  // namespace

std::vector<Index> Clustering::members(ClusterId cluster) const {
  std::vector<Index> out;
  out.reserve(cluster < sizes.size() ? sizes[cluster] : 0);
  for (Index i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == cluster) out.push_back(i);
  }
  return out;
}

Clustering kmeans(const EmbeddingSet& data, std::size_t num_clusters, std::uint64_t seed,
                  const KMeansOptions& options) {
  if (num_clusters == 0) fail(ErrorKind::kArgument, "k-means needs at least one cluster");
  if (num_clusters > data.size()) {
    fail(ErrorKind::kArgument, "k-means asked for " + std::to_string(num_clusters) +
                                   " clusters over " + std::to_string(data.size()) + " samples");
  }
  if (options.max_iters == 0) fail(ErrorKind::kArgument, "max_iters must be positive");
  if (!(options.tol > 0.0)) fail(ErrorKind::kArgument, "tol must be positive");

  Rng rng(seed);
  Clustering result;
  result.centers = seed_centers(data, num_clusters, rng);
  result.assignment.assign(data.size(), kUnassigned);

  bool confirming = false;
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    std::size_t moved = assign_pass(data, result.centers, result.assignment);
    result.sizes = count_sizes(result.assignment, num_clusters);
    moved += repair_empty(data, result.centers, result.assignment, result.sizes);
    result.objective_trace.push_back(objective_of(data, result.centers, result.assignment));
    result.iterations = iter + 1;
    if (confirming && moved == 0) {
      result.converged = true;
      break;
    }
    Matrix updated = member_means(data, result.assignment, result.sizes);
    double shift = 0.0;
    for (Eigen::Index c = 0; c < updated.rows(); ++c) {
      shift = std::max(shift, (updated.row(c) - result.centers.row(c)).norm());
    }
    result.centers = std::move(updated);
    confirming = shift < options.tol;
  }
  return result;
}

double kmeans_objective(const EmbeddingSet& data, const Clustering& clustering) {
  return objective_of(data, clustering.centers, clustering.assignment);
}

std::vector<ClusterId> select_target_clusters(const Clustering& clustering,
                                              const LabeledPool& pool, std::size_t count) {
  const std::size_t k = clustering.num_clusters();
  if (count == 0) fail(ErrorKind::kArgument, "must select at least one cluster");
  if (count > k) {
    fail(ErrorKind::kArgument, "cannot select " + std::to_string(count) + " of " +
                                   std::to_string(k) + " clusters");
  }
  std::vector<bool> covered(k, false);
  for (const Index i : pool.indices()) {
    if (i >= clustering.assignment.size()) fail(ErrorKind::kArgument, "labeled index out of range");
    covered[clustering.assignment[i]] = true;
  }
  std::vector<ClusterId> order(k);
  std::iota(order.begin(), order.end(), ClusterId{0});
  std::stable_sort(order.begin(), order.end(), [&](ClusterId a, ClusterId b) {
    if (covered[a] != covered[b]) return !covered[a];
    return clustering.sizes[a] > clustering.sizes[b];
  });
  order.resize(count);
  return order;
}

}  // namespace supclust
