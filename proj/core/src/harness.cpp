#include "supclust/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "supclust/random.hpp"

namespace supclust {

namespace {

constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kStepStream = 100;

Matrix gather_rows(const EmbeddingSet& data, std::span<const Index> rows) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.dim()));
  for (Index r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = data.embeddings().row(static_cast<Eigen::Index>(rows[r]));
  }
  return x;
}

// Row-wise softmax of X W^T + b with max subtraction.
Matrix softmax_rows(const LinearProbe& probe, const Matrix& x) {
  Matrix logits = x * probe.weights.transpose();
  logits.rowwise() += probe.bias.transpose();
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - top).exp().matrix();
    logits.row(r) /= logits.row(r).sum();
  }
  return logits;
}

void check_probe_inputs(const LinearProbe& probe, const Matrix& x, const std::vector<Label>& y) {
  if (x.rows() == 0) fail(ErrorKind::kArgument, "probe needs at least one sample");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    fail(ErrorKind::kDimensionMismatch, "label count does not match sample count");
  }
  if (x.cols() != probe.weights.cols()) {
    fail(ErrorKind::kDimensionMismatch, "probe dimension does not match the data");
  }
  for (const Label l : y) {
    if (l >= static_cast<Label>(probe.weights.rows())) {
      fail(ErrorKind::kValidation, "label exceeds the probe's class count");
    }
  }
}

struct ProbeProblem {
  Matrix x;
  std::vector<Label> y;
  std::vector<bool> present;
  std::size_t present_count = 0;
};

ProbeProblem make_problem(const EmbeddingSet& data, const LabeledPool& pool) {
  if (pool.empty()) fail(ErrorKind::kArgument, "cannot train a probe on an empty pool");
  if (!data.has_labels()) fail(ErrorKind::kValidation, "probe training needs labels");
  pool.validate(data.size());
  ProbeProblem problem;
  problem.x = gather_rows(data, pool.indices());
  problem.present.assign(*data.num_classes(), false);
  for (const Index i : pool.indices()) {
    const Label l = data.labels()[i];
    problem.y.push_back(l);
    if (!problem.present[l]) {
      problem.present[l] = true;
      ++problem.present_count;
    }
  }
  return problem;
}

LinearProbe fit(const EmbeddingSet& data, const LabeledPool& pool, const ProbeHyper& hyper,
                std::vector<double>* curve) {
  if (!(hyper.learning_rate > 0.0) || !std::isfinite(hyper.learning_rate)) {
    fail(ErrorKind::kConfiguration, "learning rate must be positive");
  }
  if (!(hyper.l2 >= 0.0) || !std::isfinite(hyper.l2)) {
    fail(ErrorKind::kConfiguration, "l2 penalty must be non-negative");
  }
  const ProbeProblem problem = make_problem(data, pool);
  const auto classes = static_cast<Eigen::Index>(problem.present.size());

  LinearProbe probe;
  probe.weights = Matrix::Zero(classes, static_cast<Eigen::Index>(data.dim()));
  probe.bias = Vector::Zero(classes);
  probe.trained_on.assign(pool.indices().begin(), pool.indices().end());

  const bool constant_only = problem.present_count == 1;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (curve) curve->push_back(probe_loss(probe, problem.x, problem.y, hyper.l2));
    const auto grad = probe_gradient(probe, problem.x, problem.y, hyper.l2);
    for (Eigen::Index c = 0; c < classes; ++c) {
      if (!problem.present[static_cast<std::size_t>(c)]) continue;
      if (!constant_only) probe.weights.row(c) -= hyper.learning_rate * grad.weights.row(c);
      probe.bias(c) -= hyper.learning_rate * grad.bias(c);
    }
  }
  if (curve) curve->push_back(probe_loss(probe, problem.x, problem.y, hyper.l2));
  if (!probe.weights.allFinite() || !probe.bias.allFinite()) {
    fail(ErrorKind::kConfiguration, "probe training diverged; lower the learning rate");
  }
  return probe;
}

double accuracy_of(const std::vector<Label>& truth, const std::vector<Label>& predicted) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace

std::string_view to_string(BudgetRegime regime) {
  switch (regime) {
    case BudgetRegime::kTiny: return "tiny";
    case BudgetRegime::kSmall: return "small";
    case BudgetRegime::kCustom: return "custom";
  }
  return "custom";
}

BudgetRegime parse_regime(std::string_view name) {
  if (name == "tiny") return BudgetRegime::kTiny;
  if (name == "small") return BudgetRegime::kSmall;
  if (name == "custom") return BudgetRegime::kCustom;
  fail(ErrorKind::kConfiguration, "unknown budget regime '" + std::string(name) + "'");
}

BudgetSchedule BudgetSchedule::tiny(std::size_t num_classes, std::size_t num_steps) {
  auto s = custom(num_classes, num_steps);
  s.regime = BudgetRegime::kTiny;
  return s;
}

BudgetSchedule BudgetSchedule::small(std::size_t num_classes, std::size_t num_steps) {
  auto s = custom(5 * num_classes, num_steps);
  s.regime = BudgetRegime::kSmall;
  return s;
}

BudgetSchedule BudgetSchedule::custom(std::size_t step_size, std::size_t num_steps) {
  if (step_size == 0) fail(ErrorKind::kConfiguration, "step size must be positive");
  if (num_steps == 0) fail(ErrorKind::kConfiguration, "number of steps must be positive");
  return {BudgetRegime::kCustom, step_size, num_steps};
}

Matrix LinearProbe::predict_proba(const Matrix& x) const {
  if (x.cols() != weights.cols()) {
    fail(ErrorKind::kDimensionMismatch, "probe dimension does not match the data");
  }
  return softmax_rows(*this, x);
}

std::vector<Label> LinearProbe::predict(const Matrix& x) const {
  const Matrix proba = predict_proba(x);
  std::vector<Label> out(static_cast<std::size_t>(proba.rows()));
  for (Eigen::Index r = 0; r < proba.rows(); ++r) {
    Eigen::Index best = 0;
    proba.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<Label>(best);
  }
  return out;
}

double probe_loss(const LinearProbe& probe, const Matrix& x, const std::vector<Label>& y,
                  double l2) {
  check_probe_inputs(probe, x, y);
  Matrix logits = x * probe.weights.transpose();
  logits.rowwise() += probe.bias.transpose();
  CompensatedSum total;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    const double lse = top + std::log((logits.row(r).array() - top).exp().sum());
    total.add(lse - logits(r, static_cast<Eigen::Index>(y[static_cast<std::size_t>(r)])));
  }
  return total.value() / static_cast<double>(x.rows()) + 0.5 * l2 * probe.weights.squaredNorm();
}

ProbeGradient probe_gradient(const LinearProbe& probe, const Matrix& x,
                             const std::vector<Label>& y, double l2) {
  check_probe_inputs(probe, x, y);
  Matrix residual = softmax_rows(probe, x);  // P - Y
  for (Eigen::Index r = 0; r < residual.rows(); ++r) {
    residual(r, static_cast<Eigen::Index>(y[static_cast<std::size_t>(r)])) -= 1.0;
  }
  const double inv_m = 1.0 / static_cast<double>(x.rows());
  ProbeGradient g;
  g.weights = inv_m * (residual.transpose() * x) + l2 * probe.weights;
  g.bias = inv_m * residual.colwise().sum().transpose();
  return g;
}

LinearProbe train_linear_probe(const EmbeddingSet& data, const LabeledPool& pool,
                               const ProbeHyper& hyper) {
  return fit(data, pool, hyper, nullptr);
}

std::vector<double> probe_loss_curve(const EmbeddingSet& data, const LabeledPool& pool,
                                     const ProbeHyper& hyper) {
  std::vector<double> curve;
  fit(data, pool, hyper, &curve);
  return curve;
}

TrainTestSplit stratified_split(const std::vector<Label>& labels, std::size_t num_classes,
                                double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorKind::kConfiguration, "test fraction must lie in (0, 1)");
  }
  std::vector<std::vector<Index>> by_class(num_classes);
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) fail(ErrorKind::kValidation, "label out of range");
    by_class[labels[i]].push_back(i);
  }
  Rng rng(seed);
  TrainTestSplit split;
  for (auto& members : by_class) {
    rng.shuffle(members.begin(), members.end());
    const auto take = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    split.test.insert(split.test.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(take));
    split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(take),
                       members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

RunRecord run_al_loop(const EmbeddingSet& data, const StrategyConfig& config,
                      const BudgetSchedule& schedule, std::uint64_t seed,
                      const RunOptions& options) {
  config.validate();
  const auto& labels = data.labels();
  const std::size_t num_classes = *data.num_classes();
  const auto split = stratified_split(labels, num_classes, options.test_fraction,
                                      derive_seed(seed, kSplitStream));
  if (split.test.empty()) fail(ErrorKind::kConfiguration, "test split is empty");
  if (schedule.step_size * schedule.num_steps > split.train.size()) {
    fail(ErrorKind::kBudgetExhausted,
         "schedule needs " + std::to_string(schedule.step_size * schedule.num_steps) +
             " samples but only " + std::to_string(split.train.size()) + " are queryable");
  }

  // Strategies only ever see the training side, without labels.
  const EmbeddingSet queryable = data.subset(split.train, false);
  const EmbeddingSet train_labeled = data.subset(split.train, true);
  const Matrix test_x = gather_rows(data, split.test);
  std::vector<Label> test_y;
  for (const Index i : split.test) test_y.push_back(labels[i]);

  RunRecord record;
  record.strategy = config.kind;
  record.seed = seed;
  record.schedule = schedule;

  LabeledPool pool;
  std::optional<LinearProbe> probe;
  for (std::size_t step = 1; step <= schedule.num_steps; ++step) {
    StrategyConfig step_config = config;
    step_config.seed = derive_seed(derive_seed(seed, kStepStream + step), config.seed);
    std::optional<Matrix> proba;
    if (is_uncertainty_strategy(config.kind)) {
      if (probe) {
        proba = probe->predict_proba(queryable.embeddings());
      } else {
        step_config.kind = StrategyKind::kRandom;
      }
    }
    const auto result =
        query(queryable, pool, schedule.step_size, step_config, proba ? &*proba : nullptr);
    pool.add(result.selected);
    probe = train_linear_probe(train_labeled, pool, options.probe);

    const auto predicted = probe->predict(test_x);
    StepRecord entry;
    entry.step = step;
    entry.labeled_count = pool.size();
    entry.test_accuracy = accuracy_of(test_y, predicted);
    std::map<Label, std::pair<std::size_t, std::size_t>> tally;  // hits, total
    for (std::size_t i = 0; i < test_y.size(); ++i) {
      auto& t = tally[test_y[i]];
      t.first += test_y[i] == predicted[i] ? 1 : 0;
      ++t.second;
    }
    CompensatedSum mean_pc;
    for (const auto& [label, t] : tally) {
      const double acc = static_cast<double>(t.first) / static_cast<double>(t.second);
      entry.per_class_accuracy.push_back({label, acc});
      mean_pc.add(acc);
    }
    entry.mean_per_class_accuracy = mean_pc.value() / static_cast<double>(tally.size());
    for (const Index local : result.selected) entry.queried.push_back(split.train[local]);
    record.steps.push_back(std::move(entry));
  }
  return record;
}

std::vector<SummaryRow> summarize_runs(const std::vector<RunRecord>& records) {
  if (records.empty()) fail(ErrorKind::kConfiguration, "no records found");
  const auto& schedule = records.front().schedule;
  for (const auto& r : records) {
    if (!(r.schedule == schedule) || r.steps.size() != schedule.num_steps) {
      fail(ErrorKind::kConfiguration, "records use different budget schedules");
    }
  }
  std::vector<StrategyKind> order;
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
  }

  std::vector<SummaryRow> rows;
  for (const auto kind : order) {
    std::vector<const RunRecord*> group;
    for (const auto& r : records) {
      if (r.strategy == kind) group.push_back(&r);
    }
    for (std::size_t s = 0; s < schedule.num_steps; ++s) {
      CompensatedSum sum;
      for (const auto* r : group) sum.add(r->steps[s].test_accuracy);
      const auto m = static_cast<double>(group.size());
      const double mean = sum.value() / m;
      double se = 0.0;
      if (group.size() > 1) {
        CompensatedSum sq;
        for (const auto* r : group) {
          const double dev = r->steps[s].test_accuracy - mean;
          sq.add(dev * dev);
        }
        se = std::sqrt(sq.value() / (m - 1.0)) / std::sqrt(m);
      }
      rows.push_back({kind, s + 1, group.front()->steps[s].labeled_count, mean, se, group.size()});
    }
  }
  return rows;
}

}  // namespace supclust
