#include "mlenkf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <thread>

#include "mlenkf/errors.hpp"
#include "mlenkf/filters.hpp"
#include "mlenkf/kalman.hpp"
#include "mlenkf/rng.hpp"

namespace mlenkf {

std::string_view method_name(Method m) { return m == Method::enkf ? "enkf" : "mlenkf"; }
std::string_view solver_name(Solver s) { return s == Solver::exact ? "exact" : "expeuler"; }

Method parse_method(std::string_view text) {
    if (text == "enkf") return Method::enkf;
    if (text == "mlenkf") return Method::mlenkf;
    throw ContractViolation("unknown method '" + std::string(text) + "' (expected enkf|mlenkf)");
}

Solver parse_solver(std::string_view text) {
    if (text == "exact") return Solver::exact;
    if (text == "expeuler") return Solver::expeuler;
    throw ContractViolation("unknown solver '" + std::string(text) + "' (expected exact|expeuler)");
}

namespace {

constexpr double kBranchTolerance = 1e-9;

// ceil that ignores round-off just above an integer.
std::size_t ceil_count(double x) {
    return static_cast<std::size_t>(std::ceil(x * (1.0 - 1e-12)));
}

double mesh(const LevelHierarchy& h, int level) {
    return std::pow(static_cast<double>(h.modes(level)), -1.0 / h.dim);
}

double solver_cost(const LevelHierarchy& h, int level, Solver solver) {
    if (level < 0) return 0.0;
    const auto n = static_cast<double>(h.modes(level));
    return solver == Solver::exact ? n : n * static_cast<double>(h.substeps(level));
}

}  // namespace

Schedule make_schedule(double epsilon, const LevelHierarchy& hierarchy, Method method,
                       double base_constant) {
    require(epsilon > 0.0 && std::isfinite(epsilon), "make_schedule: epsilon must be positive");
    require(base_constant > 0.0, "make_schedule: schedule constant must be positive");
    hierarchy.validate();

    Schedule s;
    s.method = method;
    s.epsilon = epsilon;
    s.base_constant = base_constant;
    const double levels =
        2.0 * hierarchy.dim * std::log(1.0 / epsilon) / std::log(hierarchy.kappa) / hierarchy.beta;
    s.L = std::max(0, static_cast<int>(std::ceil(levels - kBranchTolerance)));

    auto clamp = [&s](double raw) {
        std::size_t m = ceil_count(raw);
        if (m < 2) {
            m = 2;
            s.clamped = true;
        }
        return m;
    };

    if (method == Method::enkf) {
        s.M.push_back(clamp(base_constant / (epsilon * epsilon)));
        return s;
    }

    const double beta = hierarchy.beta;
    const double growth = hierarchy.cost_exponent();
    const double h_L = mesh(hierarchy, s.L);
    const double mid = (beta + growth) / 2.0;
    double tail;
    if (beta - growth > kBranchTolerance) {
        tail = std::pow(h_L, -beta);
    } else if (growth - beta > kBranchTolerance) {
        tail = std::pow(h_L, -mid);
    } else {
        tail = static_cast<double>(s.L) * static_cast<double>(s.L) * std::pow(h_L, -beta);
    }
    for (int l = 0; l <= s.L; ++l) {
        s.M.push_back(clamp(base_constant * std::pow(mesh(hierarchy, l), mid) * tail));
    }
    return s;
}

double theoretical_cost(const Schedule& s, const LevelHierarchy& hierarchy, Solver solver,
                        std::size_t steps, std::size_t obs_dim) {
    require(!s.M.empty(), "theoretical_cost: empty schedule");
    const auto m = static_cast<double>(obs_dim);
    double per_step = 0.0;
    if (s.method == Method::enkf) {
        require(s.M.size() == 1, "theoretical_cost: EnKF schedule has one ensemble size");
        per_step = static_cast<double>(s.M[0]) *
                   (solver_cost(hierarchy, s.L, solver) + m * static_cast<double>(hierarchy.modes(s.L)));
    } else {
        require(s.M.size() == static_cast<std::size_t>(s.L) + 1, "theoretical_cost: need M_0..M_L");
        for (int l = 0; l <= s.L; ++l) {
            const auto M_l = static_cast<double>(s.M[static_cast<std::size_t>(l)]);
            per_step += M_l * (solver_cost(hierarchy, l, solver) + solver_cost(hierarchy, l - 1, solver)) +
                        m * static_cast<double>(hierarchy.modes(l)) * M_l;
        }
    }
    return per_step * static_cast<double>(steps);
}

void ExperimentConfig::validate() const {
    problem.model.validate();
    hierarchy.validate();
    require(steps >= 1, "ExperimentConfig: need at least one observation time");
    require(realizations >= 2, "ExperimentConfig: need at least two realizations");
    require(realizations < (1u << 24), "ExperimentConfig: too many realizations for the key layout");
    require(jobs >= 1, "ExperimentConfig: jobs must be positive");
    require(schedule_constant > 0.0, "ExperimentConfig: schedule constant must be positive");
}

ExperimentConfig make_experiment(const ExperimentOptions& o) {
    require(o.n_ref >= 1, "make_experiment: n_ref must be positive");
    ProblemSetup problem = make_example(o.example, o.n_ref);
    const LevelHierarchy hierarchy =
        LevelHierarchy::equilibrated(problem.model.r1, problem.model.r2, o.n0, o.j0,
                                     problem.model.horizon, o.solver == Solver::expeuler);
    ExperimentConfig cfg{std::move(problem), hierarchy, o.method, o.solver, o.steps, o.realizations,
                         o.seed, o.schedule_constant, o.jobs};
    cfg.validate();
    return cfg;
}

std::vector<std::string> regime_warnings(const ExperimentConfig& cfg, const Schedule& s) {
    std::vector<std::string> out;
    const std::size_t m = cfg.problem.obs.obs_dim();
    const std::size_t n0 = cfg.hierarchy.modes(s.method == Method::enkf ? s.L : 0);
    if (m >= n0) {
        out.push_back("observation dimension m = " + std::to_string(m) +
                      " is not below the coarsest resolution N = " + std::to_string(n0) +
                      "; the multilevel error bounds assume m < N_0");
    }
    if (s.clamped) {
        out.push_back("eps = " + std::to_string(s.epsilon) +
                      ": some ensemble sizes were raised to the minimum of 2");
    }
    if (cfg.hierarchy.modes(s.L) > cfg.problem.obs.n_ref()) {
        out.push_back("level " + std::to_string(s.L) + " needs " +
                      std::to_string(cfg.hierarchy.modes(s.L)) + " modes but n_ref = " +
                      std::to_string(cfg.problem.obs.n_ref()));
    }
    return out;
}

std::vector<Eigen::VectorXd> simulate_truth(const ProblemSetup& problem, std::size_t steps,
                                            std::uint64_t seed) {
    std::vector<Eigen::VectorXd> truth;
    truth.reserve(steps + 1);
    SpectralField u{problem.u0, 0};
    truth.push_back(u.coeffs);
    for (std::size_t n = 1; n <= steps; ++n) {
        const RngKey key{seed, Purpose::truth, 0, 0, 0, static_cast<std::uint32_t>(n)};
        u = exact_mode_step(u, problem.model, key);
        truth.push_back(u.coeffs);
    }
    return truth;
}

std::vector<Eigen::VectorXd> observe_truth(const std::vector<Eigen::VectorXd>& truth,
                                           const ObservationModel& obs, std::uint64_t seed,
                                           double noise_scale) {
    require(noise_scale >= 0.0, "observe_truth: noise scale must be nonnegative");
    const auto m = static_cast<Eigen::Index>(obs.obs_dim());
    std::vector<Eigen::VectorXd> y;
    for (std::size_t n = 1; n < truth.size(); ++n) {
        Eigen::VectorXd z(m);
        NormalStream({seed, Purpose::data_noise, 0, 0, 0, static_cast<std::uint32_t>(n)})
            .fill(0, std::span<double>(z.data(), static_cast<std::size_t>(m)));
        y.push_back(obs.apply(truth[n]) + noise_scale * (obs.gamma_chol() * z));
    }
    return y;
}

std::vector<double> reference_qoi(const ProblemSetup& problem, const std::vector<Eigen::VectorXd>& y) {
    GaussianState state = GaussianState::point_mass(problem.u0);
    std::vector<double> ref;
    ref.reserve(y.size() + 1);
    ref.push_back(problem.obs.qoi_value(state.mean));
    for (const auto& obs : y) {
        kalman_step(state, obs, problem.obs, problem.model);
        ref.push_back(problem.obs.qoi_value(state.mean));
    }
    return ref;
}

ObservationData synthesize_truth_and_obs(const ExperimentConfig& cfg) {
    ObservationData data;
    data.truth = simulate_truth(cfg.problem, cfg.steps, cfg.seed);
    data.y = observe_truth(data.truth, cfg.problem.obs, cfg.seed);
    data.reference_qoi = reference_qoi(cfg.problem, data.y);
    return data;
}

std::vector<double> run_filter(const ExperimentConfig& cfg, const Schedule& schedule,
                               const ObservationData& data, std::uint32_t realization,
                               WorkCounter* work) {
    require(data.y.size() >= cfg.steps, "run_filter: not enough observations");
    require(cfg.hierarchy.modes(schedule.L) <= cfg.problem.obs.n_ref(),
            "run_filter: finest level exceeds n_ref");
    const SpectralField u0{cfg.problem.u0, 0};
    const auto& obs = cfg.problem.obs;
    std::vector<double> qoi;
    qoi.reserve(cfg.steps + 1);
    FilterKeys keys{cfg.seed, realization, 0};

    if (schedule.method == Method::enkf) {
        Ensemble e = make_ensemble(u0, schedule.L, schedule.M.at(0), cfg.hierarchy);
        qoi.push_back(empirical_qoi(e, obs));
        for (std::size_t n = 1; n <= cfg.steps; ++n) {
            keys.step = static_cast<std::uint32_t>(n);
            enkf_step(e, data.y[n - 1], obs, cfg.problem.model, cfg.hierarchy, keys, cfg.solver, work);
            qoi.push_back(empirical_qoi(e, obs));
        }
        return qoi;
    }

    MultilevelEnsemble ml = make_multilevel_ensemble(u0, schedule.M, cfg.hierarchy);
    qoi.push_back(empirical_qoi(ml, obs));
    for (std::size_t n = 1; n <= cfg.steps; ++n) {
        keys.step = static_cast<std::uint32_t>(n);
        mlenkf_step(ml, data.y[n - 1], obs, cfg.problem.model, cfg.hierarchy, keys, cfg.solver, work);
        qoi.push_back(empirical_qoi(ml, obs));
    }
    return qoi;
}

double path_squared_error(const std::vector<double>& qoi, const std::vector<double>& reference) {
    require(qoi.size() == reference.size(), "path_squared_error: length mismatch");
    double total = 0.0;
    for (std::size_t n = 0; n < qoi.size(); ++n) {
        const double d = qoi[n] - reference[n];
        total += d * d;
    }
    return total;
}

double mean_finite(const std::vector<double>& values, std::size_t* failed) {
    double sum = 0.0;
    std::size_t good = 0;
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        sum += v;
        ++good;
    }
    if (failed) *failed = values.size() - good;
    return good == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(good);
}

RunRecord estimate_mse(const ExperimentConfig& cfg, const Schedule& schedule,
                       const ObservationData& data) {
    cfg.validate();
    require(data.reference_qoi.size() == cfg.steps + 1, "estimate_mse: reference length mismatch");
    const auto start = std::chrono::steady_clock::now();

    std::vector<double> errors(cfg.realizations, std::numeric_limits<double>::quiet_NaN());
    std::vector<WorkCounter> work(cfg.realizations);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < cfg.realizations; i = next.fetch_add(1)) {
            try {
                const auto qoi = run_filter(cfg, schedule, data, static_cast<std::uint32_t>(i), &work[i]);
                errors[i] = path_squared_error(qoi, data.reference_qoi);
            } catch (const InvariantBreach&) {
                errors[i] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    };
    const unsigned threads = std::min<unsigned>(cfg.jobs, static_cast<unsigned>(cfg.realizations));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    RunRecord r;
    r.method = schedule.method;
    r.example = cfg.problem.example;
    r.solver = cfg.solver;
    r.epsilon = schedule.epsilon;
    r.L = schedule.L;
    r.cost_units = theoretical_cost(schedule, cfg.hierarchy, cfg.solver, cfg.steps,
                                    cfg.problem.obs.obs_dim());
    r.mse = mean_finite(errors, &r.failed);
    r.realizations = cfg.realizations - r.failed;
    double total_work = 0.0;
    for (const auto& w : work) total_work += static_cast<double>(w.total());
    r.measured_work = total_work / static_cast<double>(cfg.realizations);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "fit_loglog: length mismatch");
    require(x.size() >= 2, "fit_loglog: need at least two points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, "fit_loglog: values must be positive");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    require(sxx > 0.0, "fit_loglog: x values must be distinct");
    SlopeFit fit;
    fit.points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = std::log(y[i]) - fit.intercept - fit.slope * std::log(x[i]);
            rss += r * r;
        }
        fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

SlopeFit fit_loglog_slope(const std::vector<RunRecord>& records) {
    require(records.size() >= 3, "fit_loglog_slope: need at least three records");
    std::vector<double> cost, mse;
    for (const auto& r : records) {
        cost.push_back(r.cost_units);
        mse.push_back(r.mse);
    }
    return fit_loglog(cost, mse);
}

std::vector<double> normalized_series(const std::vector<RunRecord>& records) {
    std::vector<double> out;
    for (const auto& r : records) {
        out.push_back(r.L > 0 ? r.mse * r.cost_units / std::pow(static_cast<double>(r.L), 3)
                              : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

SlopeFit fit_normalized(const std::vector<RunRecord>& records) {
    const auto series = normalized_series(records);
    std::vector<double> cost, value;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!std::isfinite(series[i])) continue;
        cost.push_back(records[i].cost_units);
        value.push_back(series[i]);
    }
    return fit_loglog(cost, value);
}

}  // namespace mlenkf
