#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "supclust/scoring.hpp"
#include "supclust/strategies.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace supclust;

namespace {

// Two square grids of side n around (0,0) and (gap,0).
EmbeddingSet two_grids(int side, double gap) {
  Matrix m(2 * side * side, 2);
  Eigen::Index r = 0;
  for (int blob = 0; blob < 2; ++blob) {
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        m(r, 0) = blob * gap + 0.1 * i + 0.013 * j;
        m(r, 1) = 0.1 * j - 0.007 * i;
        ++r;
      }
    }
  }
  return EmbeddingSet(m);
}

StrategyConfig config_for(StrategyKind kind, std::uint64_t seed = 1) {
  StrategyConfig c;
  c.kind = kind;
  c.seed = seed;
  return c;
}

Probabilities random_probabilities(std::mt19937_64& gen, Index n, Index classes) {
  Matrix p = oracle::random_matrix(gen, n, classes, 0.01, 1.0);
  for (Eigen::Index r = 0; r < p.rows(); ++r) p.row(r) /= p.row(r).sum();
  return p;
}

std::vector<Index> sorted(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<Index> all_indices(Index n) {
  std::vector<Index> out(n);
  for (Index i = 0; i < n; ++i) out[i] = i;
  return out;
}

}  // namespace

TEST_CASE("supclust on two blobs picks the typical member nearest the other blob") {
  const auto data = two_grids(5, 20.0);  // 25 points each
  const auto result = supclust_query(data, LabeledPool{}, 2, config_for(StrategyKind::kSupClust));
  REQUIRE(result.selected.size() == 2);

  std::set<Index> expected;
  for (int blob = 0; blob < 2; ++blob) {
    std::vector<Index> members;
    for (Index i = 0; i < 25; ++i) members.push_back(blob * 25 + i);
    const Matrix& x = data.embeddings();
    Matrix centroids(2, 2);
    centroids.row(0) = x.topRows(25).colwise().mean();
    centroids.row(1) = x.bottomRows(25).colwise().mean();
    const auto typ = oracle::typicality(x, members, members, 20);
    std::vector<std::size_t> order(25);
    for (std::size_t t = 0; t < 25; ++t) order[t] = t;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return typ[a] > typ[b]; });
    // ceil(0.1 * 25) = 3 candidates
    Index best = members[order[0]];
    for (std::size_t t = 1; t < 3; ++t) {
      const Index cand = members[order[t]];
      if (oracle::distance(x, cand, centroids, 1 - blob) < oracle::distance(x, best, centroids, 1 - blob)) {
        best = cand;
      }
    }
    expected.insert(best);
  }
  CHECK(std::set<Index>(result.selected.begin(), result.selected.end()) == expected);
  for (const auto& t : result.trace) {
    CHECK(t.typicality.has_value());
    CHECK(t.sup.has_value());
  }
}

TEST_CASE("n = b returns every index for every strategy") {
  std::mt19937_64 gen(3);
  const EmbeddingSet data(oracle::random_matrix(gen, 9, 3));
  const Probabilities probs = random_probabilities(gen, 9, 3);
  for (const auto kind : all_strategies()) {
    CAPTURE(to_string(kind));
    const auto r = query(data, LabeledPool{}, 9, config_for(kind), &probs);
    CHECK(sorted(r.selected) == all_indices(9));
  }
}

TEST_CASE("singleton clusters make the ablations agree") {
  std::mt19937_64 gen(4);
  const EmbeddingSet data(oracle::random_matrix(gen, 7, 2));
  const auto full = sorted(supclust_query(data, {}, 7, config_for(StrategyKind::kSupClust)).selected);
  CHECK(sorted(supclust_no_sup_query(data, {}, 7, config_for(StrategyKind::kSupClustNoSup)).selected) == full);
  CHECK(sorted(supclust_no_typicality_query(data, {}, 7, config_for(StrategyKind::kSupClust)).selected) == full);
}

TEST_CASE("every strategy returns b distinct unlabeled indices") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 15; ++trial) {
    const Index n = 20 + gen() % 60;
    const Index d = 1 + gen() % 5;
    const EmbeddingSet data(oracle::random_matrix(gen, n, d));
    const Probabilities probs = random_probabilities(gen, n, 4);
    std::vector<Index> labeled;
    for (Index i = 0; i < n; ++i) {
      if (gen() % 5 == 0) labeled.push_back(i);
    }
    const LabeledPool pool(labeled);
    const std::size_t b = 1 + gen() % std::min<Index>(8, n - pool.size());
    for (const auto kind : all_strategies()) {
      CAPTURE(to_string(kind));
      const auto r = query(data, pool, b, config_for(kind, gen()), &probs);
      REQUIRE(r.selected.size() == b);
      CHECK(std::set<Index>(r.selected.begin(), r.selected.end()).size() == b);
      for (const Index i : r.selected) {
        CHECK(i < n);
        CHECK_FALSE(pool.contains(i));
      }
    }
  }
}

TEST_CASE("strategies are deterministic for a fixed seed") {
  std::mt19937_64 gen(5);
  const EmbeddingSet data(oracle::random_matrix(gen, 80, 4));
  const Probabilities probs = random_probabilities(gen, 80, 3);
  const LabeledPool pool{3, 17, 40};
  for (const auto kind : all_strategies()) {
    CAPTURE(to_string(kind));
    const auto a = query(data, pool, 6, config_for(kind, 99), &probs);
    const auto b = query(data, pool, 6, config_for(kind, 99), &probs);
    CHECK(a.selected == b.selected);
  }
}

TEST_CASE("no-sup picks come from the typicality shortlists") {
  const auto data = two_grids(6, 30.0);  // 36 per blob, shortlist of 4
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto config = config_for(StrategyKind::kSupClustNoSup, seed);
    const auto r = supclust_no_sup_query(data, {}, 2, config);
    REQUIRE(r.selected.size() == 2);
    for (const Index pick : r.selected) {
      const Index blob = pick / 36;
      std::vector<Index> members;
      for (Index i = 0; i < 36; ++i) members.push_back(blob * 36 + i);
      const auto typ = oracle::typicality(data.embeddings(), members, members, 20);
      std::vector<std::size_t> order(36);
      for (std::size_t t = 0; t < 36; ++t) order[t] = t;
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return typ[a] > typ[b]; });
      std::set<Index> shortlist;
      for (std::size_t t = 0; t < 4; ++t) shortlist.insert(members[order[t]]);
      CHECK(shortlist.count(pick) == 1);
    }
  }
}

TEST_CASE("without the typicality filter a planted outlier between blobs wins") {
  Matrix m(21, 2);
  for (int i = 0; i < 10; ++i) {
    m(i, 0) = 0.1 * (i % 3) - 0.1;
    m(i, 1) = 0.1 * (i / 3) - 0.15;
    m(10 + i, 0) = 10.0 + 0.1 * (i % 3) - 0.1;
    m(10 + i, 1) = 0.1 * (i / 3) - 0.15;
  }
  m(20, 0) = 3.0;
  m(20, 1) = 0.0;
  const EmbeddingSet data(m);

  auto config = config_for(StrategyKind::kSupClustNoTypicality);
  const auto r = supclust_no_typicality_query(data, {}, 2, config);
  CHECK(std::count(r.selected.begin(), r.selected.end(), Index{20}) == 1);

  // The filtered variant drops the outlier before SUP is consulted.
  const auto filtered = supclust_query(data, {}, 2, config_for(StrategyKind::kSupClust));
  CHECK(std::count(filtered.selected.begin(), filtered.selected.end(), Index{20}) == 0);
}

TEST_CASE("filter fraction one reproduces the no-typicality variant") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 6; ++trial) {
    const EmbeddingSet data(oracle::random_matrix(gen, 60, 3));
    auto config = config_for(StrategyKind::kSupClust, gen());
    config.filter_fraction = 1.0;
    const LabeledPool pool{1, 2};
    CHECK(supclust_query(data, pool, 5, config).selected ==
          supclust_no_typicality_query(data, pool, 5, config).selected);
  }
}

TEST_CASE("typiclust-rp picks a tight-core point, never the attached outlier") {
  Matrix m(11, 2);
  m << 0, 0, 0.1, 0, 0, 0.1, -0.1, 0, 0, -0.1,  //
      4, 0,                                      //
      100, 0, 100.1, 0, 100, 0.1, 99.9, 0, 100, -0.1;
  const EmbeddingSet data(m);
  const auto r = typiclust_rp_query(data, {}, 2, config_for(StrategyKind::kTypiClustRp));
  REQUIRE(r.selected.size() == 2);
  const std::vector<Index> members = {0, 1, 2, 3, 4, 5};
  const auto typ = oracle::typicality(m, members, members, 5);
  const auto best = static_cast<Index>(std::max_element(typ.begin(), typ.end()) - typ.begin());
  CHECK(std::count(r.selected.begin(), r.selected.end(), best) == 1);
  CHECK(std::count(r.selected.begin(), r.selected.end(), Index{5}) == 0);
}

TEST_CASE("coreset takes the farthest point") {
  Matrix m(3, 1);
  m << 0, 1, 10;
  const EmbeddingSet data(m);
  CHECK(coreset_query(data, LabeledPool{0}, 1).selected == std::vector<Index>{2});
  CHECK(coreset_query(data, LabeledPool{2}, 1).selected == std::vector<Index>{0});
  // From an empty pool every gap is infinite; the first index wins.
  CHECK(coreset_query(data, LabeledPool{}, 2).selected == std::vector<Index>{0, 2});
}

TEST_CASE("probcover") {
  std::mt19937_64 gen(2);
  const EmbeddingSet data(oracle::random_matrix(gen, 15, 2));
  SUBCASE("a radius beyond the diameter makes every ball equal") {
    CHECK(probcover_query(data, {}, 1, 100.0).selected == std::vector<Index>{0});
  }
  SUBCASE("the densest ball goes first") {
    Matrix m(6, 1);
    m << 0, 0.1, 0.2, 5, 9, 9.05;
    const auto r = probcover_query(EmbeddingSet(m), {}, 2, 0.15);
    CHECK(r.selected == std::vector<Index>{1, 4});
  }
  SUBCASE("default radius is the median nearest-neighbor distance") {
    Matrix m(4, 1);
    m << 0, 1, 3, 7;
    CHECK(median_nn_distance(EmbeddingSet(m)) == doctest::Approx(1.5));
  }
}

TEST_CASE("uncertainty strategies") {
  SUBCASE("entropy picks the uniform row") {
    Probabilities p(2, 2);
    p << 0.5, 0.5, 0.9, 0.1;
    CHECK(uncertainty_query(StrategyKind::kEntropy, &p, {}, 1).selected == std::vector<Index>{0});
  }
  SUBCASE("margin, least-confidence and entropy disagree where they should") {
    Probabilities p(3, 3);
    p << 0.6, 0.3, 0.1,  //
        0.45, 0.45, 0.1,  //
        0.4, 0.3, 0.3;
    CHECK(uncertainty_query(StrategyKind::kMargin, &p, {}, 1).selected == std::vector<Index>{1});
    CHECK(uncertainty_query(StrategyKind::kLeastConfidence, &p, {}, 1).selected == std::vector<Index>{2});
    CHECK(uncertainty_query(StrategyKind::kEntropy, &p, {}, 1).selected == std::vector<Index>{2});
    CHECK(uncertainty_query(StrategyKind::kMargin, &p, LabeledPool{1}, 1).selected == std::vector<Index>{2});
  }
  SUBCASE("missing model") {
    try {
      uncertainty_query(StrategyKind::kMargin, nullptr, {}, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kMissingModel);
    }
    Matrix m(3, 1);
    m << 0, 1, 2;
    CHECK_THROWS_AS(query(EmbeddingSet(m), {}, 1, config_for(StrategyKind::kEntropy)), Error);
  }
  SUBCASE("rows must be distributions") {
    Probabilities p(2, 2);
    p << 0.5, 0.6, 0.9, 0.1;
    CHECK_THROWS_AS(uncertainty_query(StrategyKind::kEntropy, &p, {}, 1), Error);
  }
}

TEST_CASE("budget beyond the unlabeled samples is rejected") {
  Matrix m(4, 1);
  m << 0, 1, 2, 3;
  const EmbeddingSet data(m);
  for (const auto kind : all_strategies()) {
    if (is_uncertainty_strategy(kind)) continue;
    CAPTURE(to_string(kind));
    try {
      query(data, LabeledPool{0, 1}, 3, config_for(kind));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kBudgetExhausted);
    }
  }
}

TEST_CASE("two sequential steps never re-select a labeled index") {
  std::mt19937_64 gen(44);
  const EmbeddingSet data(oracle::random_matrix(gen, 90, 3));
  for (const auto kind : all_strategies()) {
    if (is_uncertainty_strategy(kind)) continue;
    CAPTURE(to_string(kind));
    LabeledPool pool;
    const auto first = query(data, pool, 7, config_for(kind, 1));
    pool.add(first.selected);
    const auto second = query(data, pool, 7, config_for(kind, 2));
    for (const Index i : second.selected) CHECK_FALSE(pool.contains(i));
  }
}

TEST_CASE("supclust leans toward other blobs more than typiclust-rp") {
  const auto data = fixture::square_blobs(250, 5);
  Matrix centers = Matrix::Zero(4, 2);
  for (Eigen::Index k = 0; k < 4; ++k) centers.row(k) = data.embeddings().middleRows(k * 250, 250).colwise().mean();
  const auto foreign_gap = [&](const QueryResult& r) {
    double total = 0.0;
    for (const Index i : r.selected) {
      const auto own = static_cast<Index>(data.labels()[i]);
      double best = 1e300;
      for (Index k = 0; k < 4; ++k) {
        if (k != own) best = std::min(best, static_cast<double>(oracle::distance(data.embeddings(), i, centers, k)));
      }
      total += best;
    }
    return total / static_cast<double>(r.selected.size());
  };
  const auto sup = supclust_query(data, {}, 4, config_for(StrategyKind::kSupClust, 5));
  const auto rp = typiclust_rp_query(data, {}, 4, config_for(StrategyKind::kTypiClustRp, 5));
  CHECK(foreign_gap(sup) < foreign_gap(rp));
}

TEST_CASE("shortlist size") {
  CHECK(shortlist_size(0.1, 5) == 1);
  CHECK(shortlist_size(0.1, 30) == 3);
  CHECK(shortlist_size(0.1, 31) == 4);
  CHECK(shortlist_size(1.0, 7) == 7);
  CHECK(shortlist_size(0.5, 1) == 1);
}

TEST_CASE("strategy names round-trip") {
  for (const auto kind : all_strategies()) CHECK(parse_strategy(to_string(kind)) == kind);
  CHECK(parse_strategy("typiclust_rp") == StrategyKind::kTypiClustRp);
  CHECK(all_strategies().size() == 10);
  CHECK_THROWS_AS(parse_strategy("badge"), Error);
}

TEST_CASE("config validation") {
  StrategyConfig c;
  c.temperature = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.filter_fraction = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.filter_fraction = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.typicality_k = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.probcover_radius = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}
