#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "supclust/supclust.hpp"

namespace CLI {
class App;
}

namespace supclust::app {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;      // I/O or parse failure
inline constexpr int kExitConfig = 2;  // configuration or contract violation

int exit_code_for(ErrorKind kind);

struct GenDataOptions {
  std::size_t classes = 10;
  std::size_t max_per_class = 500;
  double imbalance = 1.0;
  std::size_t dim = 32;
  double center_spread = 10.0;
  double cluster_std = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path output;
};

struct QueryOptions {
  std::filesystem::path dataset;
  std::string strategy = "supclust";
  std::size_t budget = 1;
  std::optional<std::filesystem::path> labeled_file;
  std::optional<std::filesystem::path> proba_file;
  double temperature = 1.0;
  std::size_t typicality_k = 20;
  double filter_fraction = 0.1;
  std::optional<double> probcover_radius;
  std::uint64_t seed = 0;
  std::string normalize = "none";
  std::string neighbor_scope = "cluster";
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> manifest;
};

struct SimulateOptions {
  std::filesystem::path dataset;
  std::vector<std::string> strategies = {"supclust", "random"};
  std::string regime = "tiny";
  std::size_t step_size = 0;  // only for regime "custom"
  std::size_t steps = 5;
  std::size_t seeds = 10;
  std::uint64_t first_seed = 0;
  std::filesystem::path out_dir;
  double test_fraction = 0.2;
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  double l2 = 1e-4;
  double temperature = 1.0;
  std::size_t typicality_k = 20;
  double filter_fraction = 0.1;
  std::optional<double> probcover_radius;
  std::string normalize = "none";
  std::string neighbor_scope = "cluster";
  /// 0 = read SUPCLUST_THREADS, falling back to hardware concurrency.
  std::size_t threads = 0;
};

struct ReportOptions {
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> output;
};

// Each command reports failures on `err` and returns an exit code.
int cmd_gen_data(const GenDataOptions& opts, std::ostream& out, std::ostream& err);
int cmd_query(const QueryOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);

/// Worker count from SUPCLUST_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count_from_env();

/// Full command-line entry point.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace supclust::app
