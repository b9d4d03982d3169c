#pragma once
// Library side of the `mlenkf` command line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlenkf/experiment.hpp"

namespace mlenkf {

/// Runs the convergence study described by `options` and writes
/// results.csv, schedule.csv and summary.txt into out_dir. Progress goes to
/// `log`. Throws on invalid configuration or unwritable output.
std::vector<RunRecord> run_command(const ExperimentOptions& options,
                                   const std::filesystem::path& out_dir, std::ostream& log);

/// Slope fits and the L^3-normalized series, one block per
/// (method, example, solver) group.
std::string summary_text(const std::vector<RunRecord>& records);

/// Prints "method example solver points slope stderr" per group. Throws on
/// malformed CSV or a group with fewer than three rows.
void slope_command(std::istream& csv, std::ostream& out);

struct VerifyOptions {
    std::uint64_t seed = 20240601;
    bool inject_positive_part_fault = false;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

std::vector<CheckResult> run_verification(const VerifyOptions& options);

/// Prints one PASS/FAIL line per check; returns 0 iff all pass.
int verify_command(const VerifyOptions& options, std::ostream& out);

}  // namespace mlenkf
