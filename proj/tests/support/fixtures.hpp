#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "supclust/dataset.hpp"

namespace supclust::fixture {

/// Four unit-variance 2-D Gaussian blobs on the corners of a square of side
/// `side`, rotated and jittered per seed. Rows are grouped by blob; labels
/// are the blob ids. With side 10 the closest two centers are more than
/// seven standard deviations apart.
inline EmbeddingSet square_blobs(std::size_t per_blob, std::uint64_t seed, double side = 10.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double h = side / 2.0;
  const double corners[4][2] = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
  const double a = angle(gen);
  Matrix x(static_cast<Eigen::Index>(4 * per_blob), 2);
  std::vector<Label> y;
  Eigen::Index r = 0;
  for (int k = 0; k < 4; ++k) {
    const double cx = std::cos(a) * corners[k][0] - std::sin(a) * corners[k][1] + jitter(gen);
    const double cy = std::sin(a) * corners[k][0] + std::cos(a) * corners[k][1] + jitter(gen);
    for (std::size_t i = 0; i < per_blob; ++i, ++r) {
      x(r, 0) = cx + noise(gen);
      x(r, 1) = cy + noise(gen);
      y.push_back(static_cast<Label>(k));
    }
  }
  return EmbeddingSet(x, y, 4);
}

}  // namespace supclust::fixture
