#pragma once
// Locale-independent CSV output for run records and schedules.

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "mlenkf/experiment.hpp"

namespace mlenkf {

/// Shortest round-trip decimal form, '.' separator, independent of locale.
std::string format_double(double value);

inline constexpr const char* kResultsHeader =
    "method,example,solver,epsilon,L,cost_units,wall_seconds,mse,realizations";

std::string results_row(const RunRecord& r);
std::string results_csv(const std::vector<RunRecord>& records);

/// epsilon,level,M,N,J per level of every schedule.
std::string schedule_csv(const std::vector<Schedule>& schedules, const LevelHierarchy& hierarchy);

/// Parses results.csv text; throws ContractViolation on a malformed header or
/// row.
std::vector<RunRecord> parse_results_csv(std::istream& in);

/// Writes text to path, throwing ContractViolation if the file cannot be
/// written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mlenkf
