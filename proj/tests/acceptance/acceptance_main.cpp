// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "records_io.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace supclust;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0 = none
  std::function<Outcome()> body;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

std::vector<Index> iota(Index n) {
  std::vector<Index> out(n);
  for (Index i = 0; i < n; ++i) out[i] = i;
  return out;
}

// ---------------------------------------------------------------------------

Outcome weights_oracle() {
  std::mt19937_64 gen(1001);
  const double temps[] = {0.1, 1.0, 10.0};
  double worst_rel = 0.0, worst_sum = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + gen() % 49;
    const Index d = 1 + gen() % 64;
    const Matrix centers = oracle::random_matrix(gen, n, d, -1.0, 1.0);
    const Index source = gen() % n;
    const double t = temps[trial % 3];
    const auto got = cluster_weights(centers, source, t);
    const auto want = oracle::weights(centers, source, t);
    double sum = 0.0;
    for (Index j = 0; j < n; ++j) {
      sum += got.weights[j];
      if (j != source) worst_rel = std::max(worst_rel, oracle::relative_error(got.weights[j], want[j]));
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  return {worst_rel <= 1e-9 && worst_sum <= 1e-9,
          fmt("max rel err %.2e, max |sum-1| %.2e", worst_rel, worst_sum)};
}

Outcome typicality_sup_oracle() {
  std::mt19937_64 gen(2002);
  double worst_typ = 0.0, worst_sup = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 10 + gen() % 491;
    const Index d = 1 + gen() % 16;
    const EmbeddingSet data(oracle::random_matrix(gen, n, d));
    const std::size_t k = 1 + gen() % std::min<Index>(20, n - 1);
    std::vector<Index> subjects;
    for (Index i = 0; i < n; ++i) {
      if (gen() % 4 == 0) subjects.push_back(i);
    }
    if (subjects.empty()) subjects.push_back(0);
    const auto pool = iota(n);
    const auto typ = typicality(data, subjects, pool, k);
    const auto typ_want = oracle::typicality(data.embeddings(), subjects, pool, k);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      worst_typ = std::max(worst_typ, oracle::relative_error(typ.values[i], typ_want[i]));
    }

    const Index clusters = 2 + gen() % 10;
    const Matrix centers = oracle::random_matrix(gen, clusters, d);
    const Index source = gen() % clusters;
    const auto sup = sup_score(data, subjects, centers, source, cluster_weights(centers, source, 1.0));
    const auto sup_want = oracle::sup(data.embeddings(), subjects, centers, source, 1.0);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      worst_sup = std::max(worst_sup, oracle::relative_error(sup.values[i], sup_want[i]));
    }
  }
  return {worst_typ <= 1e-9 && worst_sup <= 1e-9,
          fmt("typicality max rel err %.2e, SUP max rel err %.2e", worst_typ, worst_sup)};
}

Outcome kmeans_fixed_point() {
  std::mt19937_64 gen(3003);
  int bad_assign = 0, bad_mean = 0, bad_trace = 0;
  double worst_mean = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 20 + gen() % 300;
    const Index d = 1 + gen() % 12;
    const std::size_t k = 1 + gen() % std::min<Index>(25, n);
    Matrix m = oracle::random_matrix(gen, n, d);
    const Index groups = 1 + gen() % 6;
    for (Index i = 0; i < n; ++i) m.row(static_cast<Eigen::Index>(i)).array() += 2.5 * static_cast<double>(i % groups);
    const EmbeddingSet data(m);
    const auto c = kmeans(data, k, gen());
    for (Index i = 0; i < n; ++i) {
      const auto [best, best_d] = oracle::nearest_center(m, i, c.centers);
      if (static_cast<double>(oracle::distance(m, i, c.centers, c.assignment[i])) > best_d + 1e-12) ++bad_assign;
    }
    for (ClusterId id = 0; id < k; ++id) {
      const auto members = c.members(id);
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(d));
      for (const Index i : members) mean += m.row(static_cast<Eigen::Index>(i));
      mean /= static_cast<double>(members.size());
      const double err = (mean - c.centers.row(static_cast<Eigen::Index>(id))).cwiseAbs().maxCoeff();
      worst_mean = std::max(worst_mean, err);
      if (err > 1e-9) ++bad_mean;
    }
    for (std::size_t t = 1; t < c.objective_trace.size(); ++t) {
      if (c.objective_trace[t] > c.objective_trace[t - 1] * (1.0 + 1e-12)) ++bad_trace;
    }
  }
  std::ostringstream detail;
  detail << "misassigned " << bad_assign << ", center/mean mismatches " << bad_mean << " (max "
         << worst_mean << "), objective increases " << bad_trace;
  return {bad_assign == 0 && bad_mean == 0 && bad_trace == 0, detail.str()};
}

Outcome target_selection_exhaustive() {
  std::size_t cases = 0, mismatches = 0;
  const auto check = [&](const std::vector<std::size_t>& sizes) {
    const std::size_t n = sizes.size();
    Clustering c;
    c.sizes = sizes;
    for (std::size_t id = 0; id < n; ++id) {
      for (std::size_t s = 0; s < sizes[id]; ++s) c.assignment.push_back(id);
    }
    c.centers = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
    std::vector<Index> first(n);
    for (std::size_t id = 0, offset = 0; id < n; offset += sizes[id], ++id) first[id] = offset;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<Index> labeled;
      std::set<std::size_t> covered;
      for (std::size_t id = 0; id < n; ++id) {
        if (mask & (1u << id)) {
          labeled.push_back(first[id]);
          covered.insert(id);
        }
      }
      const LabeledPool pool(labeled);
      for (std::size_t b = 1; b <= n; ++b) {
        ++cases;
        if (select_target_clusters(c, pool, b) != oracle::target_clusters(sizes, covered, b)) ++mismatches;
      }
    }
  };
  // Every size vector over {1,2,3} up to five clusters, ties included.
  for (std::size_t n = 1; n <= 5; ++n) {
    std::vector<std::size_t> sizes(n, 1);
    while (true) {
      check(sizes);
      std::size_t pos = 0;
      while (pos < n && sizes[pos] == 3) sizes[pos++] = 1;
      if (pos == n) break;
      ++sizes[pos];
    }
  }
  std::mt19937_64 gen(4004);
  for (std::size_t n = 6; n <= 8; ++n) {
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<std::size_t> sizes(n);
      for (auto& s : sizes) s = 1 + gen() % 4;
      check(sizes);
    }
  }
  return {mismatches == 0, std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches"};
}

Outcome query_fuzz() {
  std::mt19937_64 gen(5005);
  const auto& kinds = all_strategies();
  int violations = 0, irreproducible = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const StrategyKind kind = kinds[gen() % kinds.size()];
    const Index n = 5 + gen() % 116;
    const Index d = 1 + gen() % 8;
    const EmbeddingSet data(oracle::random_matrix(gen, n, d));
    std::vector<Index> labeled;
    const unsigned density = 1 + gen() % 4;
    for (Index i = 0; i < n; ++i) {
      if (gen() % 6 < density) labeled.push_back(i);
    }
    if (labeled.size() >= static_cast<std::size_t>(n)) labeled.pop_back();
    const LabeledPool pool(labeled);
    const std::size_t budget = 1 + gen() % std::min<std::size_t>(12, n - pool.size());
    Matrix probs = oracle::random_matrix(gen, n, 2 + gen() % 4, 0.01, 1.0);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) probs.row(r) /= probs.row(r).sum();

    StrategyConfig config;
    config.kind = kind;
    config.seed = gen();
    config.temperature = std::pow(10.0, -1.0 + 2.0 * static_cast<double>(gen() % 1000) / 1000.0);
    config.filter_fraction = 0.05 + 0.95 * static_cast<double>(gen() % 1000) / 1000.0;
    config.typicality_k = 1 + gen() % 25;
    config.neighbor_scope = gen() % 2 ? NeighborScope::kGlobal : NeighborScope::kCluster;

    const auto a = query(data, pool, budget, config, &probs);
    const auto b = query(data, pool, budget, config, &probs);
    const std::set<Index> unique(a.selected.begin(), a.selected.end());
    bool ok = a.selected.size() == budget && unique.size() == budget;
    for (const Index i : a.selected) ok = ok && i < n && !pool.contains(i);
    if (!ok) ++violations;
    if (a.selected != b.selected) ++irreproducible;
  }
  return {violations == 0 && irreproducible == 0,
          "1000 cases, " + std::to_string(violations) + " contract violations, " +
              std::to_string(irreproducible) + " irreproducible"};
}

Outcome foreign_center_trend() {
  int wins = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = fixture::square_blobs(250, seed);
    Matrix centers(4, 2);
    for (Eigen::Index k = 0; k < 4; ++k) centers.row(k) = data.embeddings().middleRows(k * 250, 250).colwise().mean();
    const auto gap = [&](const QueryResult& r) {
      double total = 0.0;
      for (const Index i : r.selected) {
        const auto own = static_cast<Index>(data.labels()[i]);
        double best = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < 4; ++k) {
          if (k != own) best = std::min(best, static_cast<double>(oracle::distance(data.embeddings(), i, centers, k)));
        }
        total += best;
      }
      return total / static_cast<double>(r.selected.size());
    };
    StrategyConfig config;
    config.seed = seed;
    config.temperature = 1.0;
    const double sup = gap(supclust_query(data, {}, 4, config));
    const double rp = gap(typiclust_rp_query(data, {}, 4, config));
    if (sup < rp) ++wins;
  }
  detail << wins << "/10 seeds closer to a foreign center";
  return {wins >= 9, detail.str()};
}

// Benchmark shared by the two trend criteria: one freshly drawn long-tailed
// dataset per seed, tiny schedule, five steps.
EmbeddingSet trend_dataset(std::uint64_t seed) {
  return make_blobs({10, 500, 50.0}, {32, 1.0, 0.35, seed});
}

std::vector<std::vector<double>> trend_accuracies(StrategyKind kind, std::size_t seeds) {
  std::vector<std::future<std::vector<double>>> jobs;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    jobs.push_back(std::async(std::launch::async, [kind, seed] {
      StrategyConfig config;
      config.kind = kind;
      const auto run = run_al_loop(trend_dataset(seed), config, BudgetSchedule::tiny(10, 5), seed);
      std::vector<double> acc;
      for (const auto& s : run.steps) acc.push_back(s.test_accuracy);
      return acc;
    }));
  }
  std::vector<std::vector<double>> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::vector<double> step_means(const std::vector<std::vector<double>>& runs) {
  std::vector<double> mean(runs.front().size(), 0.0);
  for (const auto& r : runs) {
    for (std::size_t s = 0; s < r.size(); ++s) mean[s] += r[s];
  }
  for (auto& m : mean) m /= static_cast<double>(runs.size());
  return mean;
}

Outcome imbalanced_trend() {
  const auto sup = step_means(trend_accuracies(StrategyKind::kSupClust, 10));
  const auto rnd = step_means(trend_accuracies(StrategyKind::kRandom, 10));
  int failures = 0;
  double diff = 0.0;
  std::ostringstream detail;
  detail.precision(4);
  for (std::size_t s = 0; s < sup.size(); ++s) {
    diff += sup[s] - rnd[s];
    if (s >= 2 && sup[s] < rnd[s]) ++failures;
    detail << "step" << s + 1 << " " << sup[s] << " vs " << rnd[s] << "; ";
  }
  diff /= static_cast<double>(sup.size());
  detail << "mean diff " << diff << ", failing steps " << failures;
  return {failures <= 1 && diff >= 0.0, detail.str()};
}

Outcome ablation_order() {
  const double full = step_means(trend_accuracies(StrategyKind::kSupClust, 20)).back();
  const double no_sup = step_means(trend_accuracies(StrategyKind::kSupClustNoSup, 20)).back();
  const double no_typ = step_means(trend_accuracies(StrategyKind::kSupClustNoTypicality, 20)).back();
  std::ostringstream detail;
  detail.precision(4);
  detail << "final step: full " << full << ", no-sup " << no_sup << ", no-typicality " << no_typ;
  return {full >= no_sup - 0.005 && full >= no_typ - 0.005, detail.str()};
}

Outcome probe_gradient_check() {
  std::mt19937_64 gen(9009);
  double worst_grad = 0.0, worst_row = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = 1 + gen() % 8;
    const Matrix x = oracle::random_matrix(gen, 10, d, -2.0, 2.0);
    std::vector<Label> y(10);
    for (auto& l : y) l = static_cast<Label>(gen() % 3);
    LinearProbe probe;
    probe.weights = oracle::random_matrix(gen, 3, d);
    probe.bias = oracle::random_matrix(gen, 3, 1).col(0);
    const double l2 = trial % 2 ? 1e-2 : 0.0;
    const auto grad = probe_gradient(probe, x, y, l2);
    const double h = 1e-6;
    const auto compare = [&](double analytic, const LinearProbe& plus, const LinearProbe& minus) {
      const double numeric = (probe_loss(plus, x, y, l2) - probe_loss(minus, x, y, l2)) / (2.0 * h);
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
      worst_grad = std::max(worst_grad, std::abs(numeric - analytic) / scale);
    };
    for (Eigen::Index c = 0; c < 3; ++c) {
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(d); ++k) {
        auto plus = probe, minus = probe;
        plus.weights(c, k) += h;
        minus.weights(c, k) -= h;
        compare(grad.weights(c, k), plus, minus);
      }
      auto plus = probe, minus = probe;
      plus.bias(c) += h;
      minus.bias(c) -= h;
      compare(grad.bias(c), plus, minus);
    }
    const Matrix p = probe.predict_proba(x);
    for (Eigen::Index r = 0; r < p.rows(); ++r) worst_row = std::max(worst_row, std::abs(p.row(r).sum() - 1.0));
  }
  return {worst_grad <= 1e-5 && worst_row <= 1e-9,
          fmt("max gradient rel err %.2e, max |row sum-1| %.2e", worst_grad, worst_row)};
}

Outcome simulate_reproducible() {
  const fs::path root = fs::temp_directory_path() / ("supclust_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(root);
  std::ostringstream sink;
  const auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "supclust");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return app::run_cli(static_cast<int>(argv.size()), argv.data(), sink, sink);
  };
  const std::string data = (root / "blobs.supc").string();
  const std::string out = (root / "runs").string();
  const std::vector<std::string> simulate = {
      "simulate", data, "--strategies", "supclust,supclust-no-sup,random,coreset,probcover,margin,entropy",
      "--regime", "tiny", "--steps", "3", "--seeds", "3", "-o", out};
  Outcome outcome;
  if (run({"gen-data", "--classes", "5", "--max-per-class", "80", "--imbalance", "10", "--dim", "8", "--seed",
           "7", "-o", data}) != 0 ||
      run(simulate) != 0) {
    outcome = {false, "command failed: " + sink.str()};
  } else {
    const std::string first = app::read_file(root / "runs" / "summary.csv");
    fs::remove_all(root / "runs");
    if (run(simulate) != 0) {
      outcome = {false, "second run failed: " + sink.str()};
    } else {
      const std::string second = app::read_file(root / "runs" / "summary.csv");
      outcome = {first == second && !first.empty(),
                 first == second ? "summary.csv identical (" + std::to_string(first.size()) + " bytes)"
                                 : "summary.csv differs"};
    }
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  return outcome;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "cluster weights vs direct evaluation", 5.0, weights_oracle},
      {2, "typicality and SUP vs brute force", 30.0, typicality_sup_oracle},
      {3, "k-means fixed point", 0.0, kmeans_fixed_point},
      {4, "target cluster rule, exhaustive", 0.0, target_selection_exhaustive},
      {5, "query contract fuzz", 0.0, query_fuzz},
      {6, "selections lean toward foreign centers", 10.0, foreign_center_trend},
      {7, "imbalanced blobs: supclust vs random", 180.0, imbalanced_trend},
      {8, "ablation ordering", 360.0, ablation_order},
      {9, "linear probe gradient", 0.0, probe_gradient_check},
      {10, "simulate reproducibility", 0.0, simulate_reproducible},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.body();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      outcome.pass = false;
      outcome.detail += fmt("; over the %.0f s limit", c.time_limit_s);
    }
    if (!outcome.pass) ++failed;
    std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << "AC-" << c.id << " " << c.name << ": " << outcome.detail
              << fmt(" (%.2f s)", secs) << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
