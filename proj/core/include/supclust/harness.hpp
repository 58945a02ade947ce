#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "supclust/common.hpp"
#include "supclust/dataset.hpp"
#include "supclust/pool.hpp"
#include "supclust/strategies.hpp"

namespace supclust {

enum class BudgetRegime { kTiny, kSmall, kCustom };

std::string_view to_string(BudgetRegime regime);
BudgetRegime parse_regime(std::string_view name);

struct BudgetSchedule {
  BudgetRegime regime = BudgetRegime::kTiny;
  std::size_t step_size = 1;
  std::size_t num_steps = 1;

  /// One query of num_classes samples per step.
  static BudgetSchedule tiny(std::size_t num_classes, std::size_t num_steps);
  /// Five times num_classes per step.
  static BudgetSchedule small(std::size_t num_classes, std::size_t num_steps);
  static BudgetSchedule custom(std::size_t step_size, std::size_t num_steps);

  friend bool operator==(const BudgetSchedule&, const BudgetSchedule&) = default;
};

struct ProbeHyper {
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  double l2 = 1e-4;
};

/// Multinomial logistic regression on frozen embeddings.
struct LinearProbe {
  Matrix weights;  // num_classes x d
  Vector bias;     // num_classes
  std::vector<Index> trained_on;

  /// Softmax class probabilities, one row per sample.
  Matrix predict_proba(const Matrix& x) const;
  std::vector<Label> predict(const Matrix& x) const;
};

/// Mean cross-entropy over the rows of `x` plus (l2 / 2) * |W|^2.
/// The bias is not penalized.
double probe_loss(const LinearProbe& probe, const Matrix& x, const std::vector<Label>& y,
                  double l2);

struct ProbeGradient {
  Matrix weights;
  Vector bias;
};

/// Analytic gradient of probe_loss.
ProbeGradient probe_gradient(const LinearProbe& probe, const Matrix& x,
                             const std::vector<Label>& y, double l2);

/// Full-batch gradient descent from zero. Only rows of classes present in
/// the pool move; absent classes keep zero parameters. A pool holding a
/// single class yields the constant classifier (bias only).
LinearProbe train_linear_probe(const EmbeddingSet& data, const LabeledPool& pool,
                               const ProbeHyper& hyper = {});

/// Per-epoch training loss, for diagnostics. Same update as train_linear_probe.
std::vector<double> probe_loss_curve(const EmbeddingSet& data, const LabeledPool& pool,
                                     const ProbeHyper& hyper);

struct ClassAccuracy {
  Label label = 0;
  double accuracy = 0.0;
};

struct StepRecord {
  std::size_t step = 0;  // 1-based
  std::size_t labeled_count = 0;
  double test_accuracy = 0.0;
  std::vector<ClassAccuracy> per_class_accuracy;  // classes present in the test split
  double mean_per_class_accuracy = 0.0;
  std::vector<Index> queried;  // global sample indices added at this step
};

struct RunRecord {
  StrategyKind strategy = StrategyKind::kRandom;
  std::uint64_t seed = 0;
  BudgetSchedule schedule;
  std::vector<StepRecord> steps;
};

struct RunOptions {
  double test_fraction = 0.2;
  ProbeHyper probe;
};

/// Stratified, seeded split. Each class contributes round(fraction * count)
/// samples to the test side. Both sides are returned in ascending order.
struct TrainTestSplit {
  std::vector<Index> train;
  std::vector<Index> test;
};
TrainTestSplit stratified_split(const std::vector<Label>& labels, std::size_t num_classes,
                                double test_fraction, std::uint64_t seed);

/// Simulated active learning from an empty pool: query, reveal labels,
/// retrain the probe, score on the held-out split. Strategies see only the
/// unlabeled training subset. Uncertainty strategies fall back to random
/// selection on the first step.
RunRecord run_al_loop(const EmbeddingSet& data, const StrategyConfig& config,
                      const BudgetSchedule& schedule, std::uint64_t seed,
                      const RunOptions& options = {});

struct SummaryRow {
  StrategyKind strategy = StrategyKind::kRandom;
  std::size_t step = 0;
  std::size_t labeled_count = 0;
  double mean_accuracy = 0.0;
  double stderr_accuracy = 0.0;  // sample std / sqrt(runs); 0 for one run
  std::size_t runs = 0;
};

/// Mean and standard error per strategy and step. Strategies appear in order
/// of first occurrence. Throws kConfiguration if schedules differ.
std::vector<SummaryRow> summarize_runs(const std::vector<RunRecord>& records);

}  // namespace supclust
