#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "supclust/harness.hpp"

namespace supclust::app {

nlohmann::json to_json(const RunRecord& record);
/// Throws supclust::Error(kParse) on schema violations.
RunRecord run_record_from_json(const nlohmann::json& j);

/// Header: strategy,step,labeled_count,mean_acc,stderr_acc
std::string summary_csv(const std::vector<SummaryRow>& rows);
/// Header: strategy,step,labeled_count,metric,value
std::string long_format_csv(const std::vector<SummaryRow>& rows);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// FNV-1a 64 of the file bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

/// Newline-separated non-negative integers; blank lines are skipped.
std::vector<Index> read_index_file(const std::filesystem::path& path);

/// n x C probabilities, comma-separated, no header.
Matrix read_probabilities(const std::filesystem::path& path);

}  // namespace supclust::app
