#include "supclust/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace supclust {

namespace {

void require_distinct(std::span<const Index> subjects, Index n) {
  std::vector<Index> sorted(subjects.begin(), subjects.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorKind::kArgument, "subject indices must be distinct");
  }
  if (!sorted.empty() && sorted.back() >= n) {
    fail(ErrorKind::kArgument, "subject index " + std::to_string(sorted.back()) + " out of range");
  }
}

double clamp_inverse(double denominator) {
  return denominator < kDegenerateDistance ? kScoreCeiling : 1.0 / denominator;
}

}  // namespace

ScoreVector typicality(const EmbeddingSet& data, std::span<const Index> subject_indices,
                       std::span<const Index> neighbor_pool, std::size_t k) {
  if (k == 0) fail(ErrorKind::kArgument, "typicality needs K >= 1");
  require_distinct(subject_indices, data.size());
  for (const Index j : neighbor_pool) {
    if (j >= data.size()) fail(ErrorKind::kArgument, "neighbor index out of range");
  }

  ScoreVector out;
  out.subject_indices.assign(subject_indices.begin(), subject_indices.end());
  out.values.reserve(subject_indices.size());
  std::vector<std::pair<double, Index>> row;
  row.reserve(neighbor_pool.size());
  for (const Index x : subject_indices) {
    row.clear();
    const auto p = data.point(x);
    for (const Index j : neighbor_pool) {
      if (j == x) continue;
      row.emplace_back(euclidean(p, data.point(j)), j);
    }
    if (row.size() < k) {
      fail(ErrorKind::kArgument, "K=" + std::to_string(k) + " exceeds the " +
                                     std::to_string(row.size()) + " neighbors available to sample " +
                                     std::to_string(x));
    }
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    std::sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k));
    CompensatedSum total;
    for (std::size_t t = 0; t < k; ++t) total.add(row[t].first);
    out.values.push_back(clamp_inverse(total.value() / static_cast<double>(k)));
  }
  return out;
}

ClusterWeights cluster_weights(const Matrix& centers, ClusterId source, double temperature) {
  const auto count = static_cast<std::size_t>(centers.rows());
  if (count < 2) fail(ErrorKind::kArgument, "cluster weights need at least two clusters");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail(ErrorKind::kArgument, "temperature must be positive and finite");
  }
  if (source >= count) fail(ErrorKind::kArgument, "source cluster out of range");

  const auto origin = row_span(centers, source);
  std::vector<double> logits(count, 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (ClusterId j = 0; j < count; ++j) {
    if (j == source) continue;
    logits[j] = -euclidean(origin, row_span(centers, j)) / temperature;
    top = std::max(top, logits[j]);
  }

  ClusterWeights out;
  out.source_cluster = source;
  out.temperature = temperature;
  out.weights.assign(count, 0.0);
  CompensatedSum total;
  for (ClusterId j = 0; j < count; ++j) {
    if (j == source) continue;
    out.weights[j] = std::exp(logits[j] - top);
    total.add(out.weights[j]);
  }
  const double norm = total.value();
  for (ClusterId j = 0; j < count; ++j) out.weights[j] /= norm;
  return out;
}

ScoreVector sup_score(const EmbeddingSet& data, std::span<const Index> subject_indices,
                      const Matrix& centers, ClusterId source, const ClusterWeights& weights) {
  if (weights.source_cluster != source) {
    fail(ErrorKind::kArgument, "weights were computed for another source cluster");
  }
  if (weights.weights.size() != static_cast<std::size_t>(centers.rows())) {
    fail(ErrorKind::kDimensionMismatch, "weights do not cover every cluster center");
  }
  if (static_cast<Index>(centers.cols()) != data.dim()) {
    fail(ErrorKind::kDimensionMismatch, "center dimension differs from data dimension");
  }
  require_distinct(subject_indices, data.size());

  ScoreVector out;
  out.subject_indices.assign(subject_indices.begin(), subject_indices.end());
  out.values.reserve(subject_indices.size());
  for (const Index x : subject_indices) {
    const auto p = data.point(x);
    CompensatedSum total;
    for (ClusterId j = 0; j < weights.weights.size(); ++j) {
      if (j == source) continue;
      total.add(weights.weights[j] * euclidean(p, row_span(centers, j)));
    }
    out.values.push_back(clamp_inverse(total.value()));
  }
  return out;
}

}  // namespace supclust
