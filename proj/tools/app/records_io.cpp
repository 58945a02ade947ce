#include "records_io.hpp"

#include <array>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace supclust::app {

using nlohmann::json;

json to_json(const RunRecord& record) {
  json steps = json::array();
  for (const auto& s : record.steps) {
    json per_class = json::array();
    for (const auto& pc : s.per_class_accuracy) {
      per_class.push_back({{"label", pc.label}, {"accuracy", pc.accuracy}});
    }
    steps.push_back({
        {"step", s.step},
        {"labeled_count", s.labeled_count},
        {"test_accuracy", s.test_accuracy},
        {"mean_per_class_accuracy", s.mean_per_class_accuracy},
        {"per_class_accuracy", per_class},
        {"queried", s.queried},
    });
  }
  return {
      {"strategy", std::string(to_string(record.strategy))},
      {"seed", record.seed},
      {"schedule",
       {{"regime", std::string(to_string(record.schedule.regime))},
        {"step_size", record.schedule.step_size},
        {"num_steps", record.schedule.num_steps}}},
      {"steps", steps},
  };
}

RunRecord run_record_from_json(const json& j) {
  try {
    RunRecord r;
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    const auto& sched = j.at("schedule");
    r.schedule.regime = parse_regime(sched.at("regime").get<std::string>());
    r.schedule.step_size = sched.at("step_size").get<std::size_t>();
    r.schedule.num_steps = sched.at("num_steps").get<std::size_t>();
    for (const auto& s : j.at("steps")) {
      StepRecord step;
      step.step = s.at("step").get<std::size_t>();
      step.labeled_count = s.at("labeled_count").get<std::size_t>();
      step.test_accuracy = s.at("test_accuracy").get<double>();
      step.mean_per_class_accuracy = s.at("mean_per_class_accuracy").get<double>();
      for (const auto& pc : s.at("per_class_accuracy")) {
        step.per_class_accuracy.push_back(
            {pc.at("label").get<Label>(), pc.at("accuracy").get<double>()});
      }
      step.queried = s.at("queried").get<std::vector<Index>>();
      r.steps.push_back(std::move(step));
    }
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("malformed run record: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::kParse, std::string("malformed run record: ") + e.what());
  }
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "strategy,step,labeled_count,mean_acc,stderr_acc\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.strategy)) + ',' + std::to_string(r.step) + ',' +
           std::to_string(r.labeled_count) + ',' + format_double(r.mean_accuracy) + ',' +
           format_double(r.stderr_accuracy) + '\n';
  }
  return out;
}

std::string long_format_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "strategy,step,labeled_count,metric,value\n";
  for (const auto& r : rows) {
    const std::string prefix = std::string(to_string(r.strategy)) + ',' + std::to_string(r.step) +
                               ',' + std::to_string(r.labeled_count) + ',';
    out += prefix + "mean_acc," + format_double(r.mean_accuracy) + '\n';
    out += prefix + "stderr_acc," + format_double(r.stderr_accuracy) + '\n';
    out += prefix + "runs," + std::to_string(r.runs) + '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  static std::atomic<unsigned> counter{0};
  const auto tag = std::hash<std::thread::id>{}(std::this_thread::get_id()) ^ counter.fetch_add(1);
  auto tmp = path;
  tmp += ".tmp" + std::to_string(tag);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) fail(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::kIo, "cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string file_checksum(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> hex{};
  std::snprintf(hex.data(), hex.size(), "%016llx", static_cast<unsigned long long>(h));
  return hex.data();
}

std::vector<Index> read_index_file(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Index> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string_view tok(line.data() + first, last - first + 1);
    Index value = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail(ErrorKind::kParse, path.string() + ": line " + std::to_string(line_no) +
                                  ": expected a non-negative integer index");
    }
    out.push_back(value);
  }
  return out;
}

Matrix read_probabilities(const std::filesystem::path& path) {
  return load_embeddings(path, FileFormat::kCsv, CsvLabels::kAbsent).embeddings();
}

}  // namespace supclust::app
