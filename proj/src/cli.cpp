#include "mlenkf/cli.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "mlenkf/csv.hpp"
#include "mlenkf/errors.hpp"

namespace mlenkf {

namespace {

using GroupKey = std::tuple<std::string, int, std::string>;

std::map<GroupKey, std::vector<RunRecord>> group_records(const std::vector<RunRecord>& records) {
    std::map<GroupKey, std::vector<RunRecord>> groups;
    for (const auto& r : records) {
        groups[{std::string(method_name(r.method)), r.example, std::string(solver_name(r.solver))}]
            .push_back(r);
    }
    return groups;
}

}  // namespace

std::vector<RunRecord> run_command(const ExperimentOptions& options,
                                   const std::filesystem::path& out_dir, std::ostream& log) {
    require(!options.eps.empty(), "run: eps list is empty");
    const ExperimentConfig cfg = make_experiment(options);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec && std::filesystem::is_directory(out_dir),
            "run: cannot create output directory " + out_dir.string());

    const ObservationData data = synthesize_truth_and_obs(cfg);
    std::vector<RunRecord> records;
    std::vector<Schedule> schedules;
    for (double eps : options.eps) {
        const Schedule s = make_schedule(eps, cfg.hierarchy, cfg.method, cfg.schedule_constant);
        for (const auto& w : regime_warnings(cfg, s)) log << "warning: " << w << '\n';
        const RunRecord r = estimate_mse(cfg, s, data);
        if (r.failed > 0) {
            log << "warning: eps = " << format_double(eps) << ": " << r.failed
                << " realization(s) produced non-finite output and were excluded\n";
        }
        log << method_name(r.method) << " example " << r.example << ' ' << solver_name(r.solver)
            << " eps=" << format_double(eps) << " L=" << r.L << " cost=" << format_double(r.cost_units)
            << " mse=" << format_double(r.mse) << " (" << std::fixed << std::setprecision(2)
            << r.wall_seconds << " s)\n"
            << std::defaultfloat;
        records.push_back(r);
        schedules.push_back(s);
    }
    write_text_file(out_dir / "results.csv", results_csv(records));
    write_text_file(out_dir / "schedule.csv", schedule_csv(schedules, cfg.hierarchy));
    write_text_file(out_dir / "summary.txt", summary_text(records));
    return records;
}

std::string summary_text(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    for (const auto& [key, group] : group_records(records)) {
        const auto& [method, example, solver] = key;
        out << method << " example " << example << ' ' << solver << '\n';
        bool distinct = group.size() >= 3;
        for (std::size_t i = 1; i < group.size() && distinct; ++i) {
            distinct = group[i].cost_units != group[i - 1].cost_units;
        }
        if (distinct) {
            const SlopeFit fit = fit_loglog_slope(group);
            out << "  mse-vs-cost slope " << format_double(fit.slope) << " +- "
                << format_double(fit.slope_stderr) << '\n';
        } else {
            out << "  mse-vs-cost slope: needs at least three distinct cost values\n";
        }
        const auto series = normalized_series(group);
        out << "  mse*cost/L^3:";
        for (double v : series) out << ' ' << format_double(v);
        out << '\n';
    }
    return out.str();
}

void slope_command(std::istream& csv, std::ostream& out) {
    const auto records = parse_results_csv(csv);
    require(!records.empty(), "slope: no data rows");
    out << "method example solver points slope stderr\n";
    for (const auto& [key, group] : group_records(records)) {
        const auto& [method, example, solver] = key;
        require(group.size() >= 3, "slope: group " + method + '/' + std::to_string(example) + '/' +
                                       solver + " has fewer than three rows");
        const SlopeFit fit = fit_loglog_slope(group);
        out << method << ' ' << example << ' ' << solver << ' ' << fit.points << ' '
            << format_double(fit.slope) << ' ' << format_double(fit.slope_stderr) << '\n';
    }
}

int verify_command(const VerifyOptions& options, std::ostream& out) {
    const auto results = run_verification(options);
    int failed = 0;
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) out << "  (" << r.detail << ')';
        out << '\n';
        if (!r.passed) ++failed;
    }
    out << results.size() - static_cast<std::size_t>(failed) << '/' << results.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace mlenkf
