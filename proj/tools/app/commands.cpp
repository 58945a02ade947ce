#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "records_io.hpp"

namespace supclust::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

Normalization parse_normalization(const std::string& name) {
  if (name == "none") return Normalization::kNone;
  if (name == "l2") return Normalization::kL2;
  fail(ErrorKind::kConfiguration, "unknown normalization '" + name + "'");
}

NeighborScope parse_scope(const std::string& name) {
  if (name == "cluster") return NeighborScope::kCluster;
  if (name == "global") return NeighborScope::kGlobal;
  fail(ErrorKind::kConfiguration, "unknown neighbor scope '" + name + "'");
}

EmbeddingSet load_dataset(const fs::path& path, const std::string& normalization) {
  const auto mode = parse_normalization(normalization);
  return normalize(load_embeddings(path, format_from_extension(path)), mode);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string serialize_dataset(const EmbeddingSet& data, FileFormat format) {
  std::ostringstream buf(std::ios::binary);
  if (format == FileFormat::kCsv) {
    write_csv(data, buf);
  } else {
    write_raw_f32(data, buf);
  }
  return buf.str();
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kIo:
    case ErrorKind::kValidation:
    case ErrorKind::kDimensionMismatch:
      return kExitIo;
    default:
      return kExitConfig;
  }
}

std::size_t worker_count_from_env() {
  std::size_t requested = 0;
  if (const char* env = std::getenv("SUPCLUST_THREADS"); env != nullptr && *env != '\0') {
    requested = static_cast<std::size_t>(std::strtoull(env, nullptr, 10));
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

int cmd_gen_data(const GenDataOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.classes < 2) fail(ErrorKind::kConfiguration, "--classes must be at least 2");
    if (opts.max_per_class < 1) fail(ErrorKind::kConfiguration, "--max-per-class must be at least 1");
    if (opts.output.empty()) fail(ErrorKind::kConfiguration, "--output is required");

    const ImbalanceProfile profile{opts.classes, opts.max_per_class, opts.imbalance};
    const BlobParams params{opts.dim, opts.center_spread, opts.cluster_std, opts.seed};
    const auto counts = class_counts(profile);
    const auto data = make_blobs(profile, params);
    write_file_atomic(opts.output, serialize_dataset(data, format_from_extension(opts.output)));

    const json manifest = {
        {"artifact_version", kArtifactVersion},
        {"command", "gen-data"},
        {"config",
         {{"classes", opts.classes},
          {"max_per_class", opts.max_per_class},
          {"imbalance", opts.imbalance},
          {"dim", opts.dim},
          {"center_spread", opts.center_spread},
          {"cluster_std", opts.cluster_std},
          {"output", opts.output.filename().string()}}},
        {"class_counts", counts},
        {"dataset_checksum", file_checksum(opts.output)},
        {"seeds", {opts.seed}},
    };
    auto manifest_path = opts.output;
    manifest_path += ".manifest.json";
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");

    out << "wrote " << data.size() << " samples (" << opts.classes << " classes, d=" << opts.dim
        << ") to " << opts.output.string() << '\n';
    return kExitOk;
  });
}

int cmd_query(const QueryOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto data = load_dataset(opts.dataset, opts.normalize);
    LabeledPool pool;
    if (opts.labeled_file) pool = LabeledPool(read_index_file(*opts.labeled_file));
    std::optional<Matrix> proba;
    if (opts.proba_file) proba = read_probabilities(*opts.proba_file);

    StrategyConfig config;
    config.kind = parse_strategy(opts.strategy);
    config.temperature = opts.temperature;
    config.typicality_k = opts.typicality_k;
    config.filter_fraction = opts.filter_fraction;
    config.probcover_radius = opts.probcover_radius;
    config.seed = opts.seed;
    config.neighbor_scope = parse_scope(opts.neighbor_scope);

    const auto result = query(data, pool, opts.budget, config, proba ? &*proba : nullptr);
    std::string lines;
    for (const Index i : result.selected) lines += std::to_string(i) + '\n';
    if (opts.output) {
      write_file_atomic(*opts.output, lines);
    } else {
      out << lines;
    }
    if (opts.manifest) {
      const json manifest = {
          {"artifact_version", kArtifactVersion},
          {"command", "query"},
          {"config",
           {{"dataset", opts.dataset.filename().string()},
            {"strategy", std::string(to_string(config.kind))},
            {"budget", opts.budget},
            {"labeled", std::vector<Index>(pool.indices().begin(), pool.indices().end())},
            {"temperature", opts.temperature},
            {"typicality_k", opts.typicality_k},
            {"filter_fraction", opts.filter_fraction},
            {"probcover_radius", optional_json(opts.probcover_radius)},
            {"normalize", opts.normalize},
            {"neighbor_scope", opts.neighbor_scope},
            {"proba_checksum", opts.proba_file ? json(file_checksum(*opts.proba_file)) : json(nullptr)}}},
          {"dataset_checksum", file_checksum(opts.dataset)},
          {"seeds", {opts.seed}},
          {"selected", result.selected},
      };
      write_file_atomic(*opts.manifest, manifest.dump(2) + "\n");
    }
    return kExitOk;
  });
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.out_dir.empty()) fail(ErrorKind::kConfiguration, "--out is required");
    if (opts.seeds == 0) fail(ErrorKind::kConfiguration, "--seeds must be at least 1");
    if (opts.strategies.empty()) fail(ErrorKind::kConfiguration, "--strategies is empty");

    const auto data = load_dataset(opts.dataset, opts.normalize);
    if (!data.has_labels()) {
      fail(ErrorKind::kConfiguration, "simulate needs a labeled dataset");
    }
    const std::size_t num_classes = *data.num_classes();
    const auto regime = parse_regime(opts.regime);
    BudgetSchedule schedule;
    switch (regime) {
      case BudgetRegime::kTiny: schedule = BudgetSchedule::tiny(num_classes, opts.steps); break;
      case BudgetRegime::kSmall: schedule = BudgetSchedule::small(num_classes, opts.steps); break;
      case BudgetRegime::kCustom: schedule = BudgetSchedule::custom(opts.step_size, opts.steps); break;
    }

    std::vector<StrategyKind> kinds;
    for (const auto& name : opts.strategies) {
      const auto kind = parse_strategy(name);
      if (std::find(kinds.begin(), kinds.end(), kind) != kinds.end()) {
        fail(ErrorKind::kConfiguration, "strategy '" + name + "' listed twice");
      }
      kinds.push_back(kind);
    }
    StrategyConfig base;
    base.temperature = opts.temperature;
    base.typicality_k = opts.typicality_k;
    base.filter_fraction = opts.filter_fraction;
    base.probcover_radius = opts.probcover_radius;
    base.neighbor_scope = parse_scope(opts.neighbor_scope);
    base.validate();
    RunOptions run_options;
    run_options.test_fraction = opts.test_fraction;
    run_options.probe = {opts.learning_rate, opts.epochs, opts.l2};

    std::vector<std::uint64_t> seeds(opts.seeds);
    for (std::size_t s = 0; s < opts.seeds; ++s) seeds[s] = opts.first_seed + s;

    const std::string checksum = file_checksum(opts.dataset);
    fs::create_directories(opts.out_dir);
    const auto manifest_path = opts.out_dir / "manifest.json";
    if (fs::exists(manifest_path)) {
      const json previous = read_json_file(manifest_path);
      if (previous.value("dataset_checksum", std::string()) != checksum) {
        fail(ErrorKind::kConfiguration, "run directory " + opts.out_dir.string() +
                                            " holds results for a different dataset");
      }
    }

    // Fan out (strategy, seed) runs; each slot is written by exactly one worker.
    const std::size_t tasks = kinds.size() * seeds.size();
    std::vector<std::optional<RunRecord>> records(tasks);
    std::vector<std::exception_ptr> failures(tasks);
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
      for (std::size_t t = next++; t < tasks; t = next++) {
        try {
          StrategyConfig config = base;
          config.kind = kinds[t / seeds.size()];
          records[t] = run_al_loop(data, config, schedule, seeds[t % seeds.size()], run_options);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      }
    };
    const std::size_t workers =
        std::min(tasks, opts.threads ? opts.threads : worker_count_from_env());
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
      work();
    }
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    std::vector<RunRecord> finished;
    for (auto& r : records) {
      const std::string name = "run_" + std::string(to_string(r->strategy)) + "_seed" +
                               std::to_string(r->seed) + ".json";
      write_file_atomic(opts.out_dir / name, to_json(*r).dump(2) + "\n");
      finished.push_back(std::move(*r));
    }
    const auto summary = summarize_runs(finished);
    write_file_atomic(opts.out_dir / "summary.csv", summary_csv(summary));

    std::vector<std::string> strategy_names;
    for (const auto kind : kinds) strategy_names.emplace_back(to_string(kind));
    const json manifest = {
        {"artifact_version", kArtifactVersion},
        {"command", "simulate"},
        {"config",
         {{"dataset", opts.dataset.filename().string()},
          {"strategies", strategy_names},
          {"regime", opts.regime},
          {"step_size", schedule.step_size},
          {"steps", schedule.num_steps},
          {"test_fraction", opts.test_fraction},
          {"learning_rate", opts.learning_rate},
          {"epochs", opts.epochs},
          {"l2", opts.l2},
          {"temperature", opts.temperature},
          {"typicality_k", opts.typicality_k},
          {"filter_fraction", opts.filter_fraction},
          {"probcover_radius", optional_json(opts.probcover_radius)},
          {"normalize", opts.normalize},
          {"neighbor_scope", opts.neighbor_scope}}},
        {"dataset_checksum", checksum},
        {"seeds", seeds},
    };
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
    out << "wrote " << finished.size() << " run records and summary.csv to "
        << opts.out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!fs::is_directory(opts.run_dir)) {
      fail(ErrorKind::kIo, "run directory " + opts.run_dir.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opts.run_dir)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.starts_with("run_") && name.ends_with(".json")) {
        files.push_back(entry.path());
      }
    }
    if (files.empty()) fail(ErrorKind::kConfiguration, "no records found in " + opts.run_dir.string());

    std::vector<RunRecord> records;
    for (const auto& f : files) records.push_back(run_record_from_json(read_json_file(f)));

    // Strategy order from the manifest when there is one, else by name.
    std::map<StrategyKind, std::size_t> rank;
    const auto manifest_path = opts.run_dir / "manifest.json";
    if (fs::exists(manifest_path)) {
      const json manifest = read_json_file(manifest_path);
      if (manifest.contains("config") && manifest["config"].contains("strategies")) {
        for (const auto& s : manifest["config"]["strategies"]) {
          rank.emplace(parse_strategy(s.get<std::string>()), rank.size());
        }
      }
    }
    const auto rank_of = [&](StrategyKind k) {
      const auto it = rank.find(k);
      return it == rank.end() ? rank.size() : it->second;
    };
    std::sort(records.begin(), records.end(), [&](const RunRecord& a, const RunRecord& b) {
      const auto ra = rank_of(a.strategy), rb = rank_of(b.strategy);
      if (ra != rb) return ra < rb;
      if (a.strategy != b.strategy) return to_string(a.strategy) < to_string(b.strategy);
      return a.seed < b.seed;
    });

    const auto summary = summarize_runs(records);
    const std::size_t steps = records.front().schedule.num_steps;

    std::size_t width = 8;
    for (const auto& row : summary) width = std::max(width, to_string(row.strategy).size());
    std::ostringstream table;
    table << std::string(width, ' ');
    for (std::size_t s = 0; s < steps; ++s) {
      char head[64];
      std::snprintf(head, sizeof head, "  %17s", ("n=" + std::to_string(summary[s].labeled_count)).c_str());
      table << head;
    }
    table << '\n';
    for (std::size_t r = 0; r < summary.size(); r += steps) {
      const auto name = std::string(to_string(summary[r].strategy));
      table << name << std::string(width - name.size(), ' ');
      for (std::size_t s = 0; s < steps; ++s) {
        const auto& row = summary[r + s];
        const std::string cell = fixed(row.mean_accuracy, 4) + " +/- " + fixed(row.stderr_accuracy, 4);
        char buf[64];
        std::snprintf(buf, sizeof buf, "  %17s", cell.c_str());
        table << buf;
      }
      table << '\n';
    }
    out << table.str();

    const auto csv_path = opts.output ? *opts.output : opts.run_dir / "report_long.csv";
    write_file_atomic(csv_path, long_format_csv(summary));
    out << "long-format table written to " << csv_path.string() << '\n';
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SUPClust active-learning query engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a labeled Gaussian-blob dataset");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes")->capture_default_str();
  gen_cmd->add_option("--max-per-class", gen.max_per_class, "Samples in the largest class")
      ->capture_default_str();
  gen_cmd->add_option("--imbalance", gen.imbalance, "Largest / smallest class size ratio")
      ->capture_default_str();
  gen_cmd->add_option("--dim", gen.dim, "Embedding dimension")->capture_default_str();
  gen_cmd->add_option("--center-spread", gen.center_spread,
                      "Class centers are uniform in [-spread, spread]^dim")
      ->capture_default_str();
  gen_cmd->add_option("--cluster-std", gen.cluster_std, "Per-class Gaussian noise")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("-o,--output", gen.output, "Output file (.csv or raw binary)")->required();

  QueryOptions q;
  std::string q_labeled, q_proba, q_output, q_manifest;
  double q_radius = 0.0;
  auto* query_cmd = app.add_subcommand("query", "Select samples to label next");
  query_cmd->add_option("dataset", q.dataset, "Embedding file")->required();
  query_cmd->add_option("--strategy", q.strategy, "Query strategy")->capture_default_str();
  query_cmd->add_option("--budget", q.budget, "Number of samples to select")->required();
  query_cmd->add_option("--labeled", q_labeled, "File with already-labeled indices, one per line");
  query_cmd->add_option("--proba-file", q_proba, "Classifier probabilities (CSV, n x classes)");
  query_cmd->add_option("-T,--temperature", q.temperature, "Softmax temperature")->capture_default_str();
  query_cmd->add_option("-K,--typicality-k", q.typicality_k, "Neighbors used for typicality")
      ->capture_default_str();
  query_cmd->add_option("--filter-fraction", q.filter_fraction, "Typical shortlist fraction")
      ->capture_default_str();
  auto* q_radius_opt = query_cmd->add_option("--radius", q_radius, "ProbCover ball radius");
  query_cmd->add_option("--seed", q.seed, "Random seed")->capture_default_str();
  query_cmd->add_option("--normalize", q.normalize, "Embedding normalization")
      ->check(CLI::IsMember({"none", "l2"}))
      ->capture_default_str();
  query_cmd->add_option("--neighbor-scope", q.neighbor_scope, "Typicality neighbor pool")
      ->check(CLI::IsMember({"cluster", "global"}))
      ->capture_default_str();
  query_cmd->add_option("-o,--output", q_output, "Write indices here instead of stdout");
  query_cmd->add_option("--manifest", q_manifest, "Write a reproducibility manifest");

  SimulateOptions sim;
  std::string sim_out;
  double sim_radius = 0.0;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate active-learning runs over seeds");
  sim_cmd->add_option("dataset", sim.dataset, "Labeled embedding file")->required();
  sim_cmd->add_option("--strategies", sim.strategies, "Comma-separated strategies")
      ->delimiter(',')
      ->capture_default_str();
  sim_cmd->add_option("--regime", sim.regime, "Budget regime")
      ->check(CLI::IsMember({"tiny", "small", "custom"}))
      ->capture_default_str();
  sim_cmd->add_option("--step-size", sim.step_size, "Per-step budget for --regime custom");
  sim_cmd->add_option("--steps", sim.steps, "Query steps per run")->capture_default_str();
  sim_cmd->add_option("--seeds", sim.seeds, "Number of seeds")->capture_default_str();
  sim_cmd->add_option("--first-seed", sim.first_seed, "First seed")->capture_default_str();
  sim_cmd->add_option("-o,--out", sim_out, "Output directory")->required();
  sim_cmd->add_option("--test-fraction", sim.test_fraction, "Held-out fraction per class")
      ->capture_default_str();
  sim_cmd->add_option("--lr", sim.learning_rate, "Probe learning rate")->capture_default_str();
  sim_cmd->add_option("--epochs", sim.epochs, "Probe epochs")->capture_default_str();
  sim_cmd->add_option("--l2", sim.l2, "Probe L2 penalty")->capture_default_str();
  sim_cmd->add_option("-T,--temperature", sim.temperature, "Softmax temperature")
      ->capture_default_str();
  sim_cmd->add_option("-K,--typicality-k", sim.typicality_k, "Neighbors used for typicality")
      ->capture_default_str();
  sim_cmd->add_option("--filter-fraction", sim.filter_fraction, "Typical shortlist fraction")
      ->capture_default_str();
  auto* sim_radius_opt = sim_cmd->add_option("--radius", sim_radius, "ProbCover ball radius");
  sim_cmd->add_option("--normalize", sim.normalize, "Embedding normalization")
      ->check(CLI::IsMember({"none", "l2"}))
      ->capture_default_str();
  sim_cmd->add_option("--neighbor-scope", sim.neighbor_scope, "Typicality neighbor pool")
      ->check(CLI::IsMember({"cluster", "global"}))
      ->capture_default_str();
  sim_cmd->add_option("--threads", sim.threads, "Workers (0 = SUPCLUST_THREADS or auto)")
      ->capture_default_str();

  ReportOptions rep;
  std::string rep_output;
  auto* rep_cmd = app.add_subcommand("report", "Summarize a simulate output directory");
  rep_cmd->add_option("run_dir", rep.run_dir, "Directory written by simulate")->required();
  rep_cmd->add_option("-o,--output", rep_output, "Long-format CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*gen_cmd) return cmd_gen_data(gen, out, err);
  if (*query_cmd) {
    if (!q_labeled.empty()) q.labeled_file = q_labeled;
    if (!q_proba.empty()) q.proba_file = q_proba;
    if (!q_output.empty()) q.output = q_output;
    if (!q_manifest.empty()) q.manifest = q_manifest;
    if (q_radius_opt->count() > 0) q.probcover_radius = q_radius;
    return cmd_query(q, out, err);
  }
  if (*sim_cmd) {
    sim.out_dir = sim_out;
    if (sim_radius_opt->count() > 0) sim.probcover_radius = sim_radius;
    return cmd_simulate(sim, out, err);
  }
  if (*rep_cmd) {
    if (!rep_output.empty()) rep.output = rep_output;
    return cmd_report(rep, out, err);
  }
  return kExitConfig;
}

}  // namespace supclust::app
