#pragma once
// Flat key = value run configuration. Lines starting with '#' are comments.
//
//   example = 1            1 | 2
//   method = mlenkf        enkf | mlenkf
//   solver = exact         exact | expeuler
//   eps = 0.25, 0.125      target accuracies
//   realizations = 20
//   seed = 1
//   n_ref = 1024
//   jobs = 1
//   steps = 10             observation times N
//   schedule_constant = 1
//   n0 = 1                 N_0
//   j0 = 1                 J_0

#include <filesystem>
#include <string_view>
#include <vector>

#include "mlenkf/experiment.hpp"

namespace mlenkf {

/// Throws ContractViolation for unknown keys or malformed values.
void apply_setting(ExperimentOptions& options, std::string_view key, std::string_view value);
ExperimentOptions parse_config_text(std::string_view text, ExperimentOptions base = {});
ExperimentOptions load_config(const std::filesystem::path& path);

std::vector<double> parse_eps_list(std::string_view text);

}  // namespace mlenkf
