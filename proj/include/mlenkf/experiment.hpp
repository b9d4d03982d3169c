#pragma once
// Convergence studies: sample-size schedules, synthetic data, MSE against the
// Kalman reference, cost accounting and log-log rate fits.

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mlenkf/model.hpp"
#include "mlenkf/presets.hpp"
#include "mlenkf/spectral.hpp"

namespace mlenkf {

enum class Method { enkf, mlenkf };

std::string_view method_name(Method m);
std::string_view solver_name(Solver s);  // "exact" | "expeuler"
Method parse_method(std::string_view text);
Solver parse_solver(std::string_view text);

struct Schedule {
    Method method = Method::mlenkf;
    double epsilon = 0.0;
    int L = 0;
    std::vector<std::size_t> M;  // M_0..M_L, or the single EnKF ensemble size
    double base_constant = 1.0;
    bool clamped = false;  // some M was raised to the minimum of 2
};

/// L = ceil(2 d log_kappa(1/eps) / beta). MLEnKF sizes follow the
/// three-branch rule selected by sign(beta - (d gamma_x + gamma_t)); EnKF uses
/// M = ceil(c eps^-2) on level L. Every size is at least 2.
Schedule make_schedule(double epsilon, const LevelHierarchy& hierarchy, Method method,
                       double base_constant = 1.0);

/// Cost units of one filter run: per step, each level adds
/// M_l (cost Psi^l + cost Psi^{l-1}) + m N_l M_l with cost Psi^l = N_l
/// (exact in time) or N_l J_l (exponential Euler).
double theoretical_cost(const Schedule& s, const LevelHierarchy& hierarchy, Solver solver,
                        std::size_t steps, std::size_t obs_dim);

struct ExperimentOptions {
    int example = 1;
    Method method = Method::mlenkf;
    Solver solver = Solver::exact;
    std::vector<double> eps;
    std::size_t realizations = 20;
    std::uint64_t seed = 1;
    std::size_t n_ref = 1024;
    unsigned jobs = 1;
    std::size_t steps = 10;
    double schedule_constant = 1.0;
    std::size_t n0 = 1;
    std::size_t j0 = 1;
};

struct ExperimentConfig {
    ProblemSetup problem;
    LevelHierarchy hierarchy;
    Method method = Method::mlenkf;
    Solver solver = Solver::exact;
    std::size_t steps = 10;  // N observation times
    std::size_t realizations = 20;
    std::uint64_t seed = 1;
    double schedule_constant = 1.0;
    unsigned jobs = 1;

    void validate() const;
};

/// Error-equilibrated hierarchy for the chosen example and solver.
ExperimentConfig make_experiment(const ExperimentOptions& options);

/// Messages about regimes the theory does not cover (m >= N_0, clamped M).
std::vector<std::string> regime_warnings(const ExperimentConfig& cfg, const Schedule& s);

struct ObservationData {
    std::vector<Eigen::VectorXd> truth;   // u_0..u_N at n_ref
    std::vector<Eigen::VectorXd> y;       // y_1..y_N, stored at index n-1
    std::vector<double> reference_qoi;    // phi of the Kalman mean, n = 0..N
};

/// u_{n+1} = Psi(u_n) exactly in time at n_ref, keyed by (seed, truth, step).
std::vector<Eigen::VectorXd> simulate_truth(const ProblemSetup& problem, std::size_t steps,
                                            std::uint64_t seed);
/// y_n = H u_n + noise_scale * chol(Gamma) z_n for n = 1..N.
std::vector<Eigen::VectorXd> observe_truth(const std::vector<Eigen::VectorXd>& truth,
                                           const ObservationModel& obs, std::uint64_t seed,
                                           double noise_scale = 1.0);
/// phi(m_n), n = 0..N, from the Kalman filter at n_ref fed with y.
std::vector<double> reference_qoi(const ProblemSetup& problem, const std::vector<Eigen::VectorXd>& y);

ObservationData synthesize_truth_and_obs(const ExperimentConfig& cfg);

/// Filter QoI path mu_n(phi), n = 0..N, for one realization.
std::vector<double> run_filter(const ExperimentConfig& cfg, const Schedule& schedule,
                               const ObservationData& data, std::uint32_t realization,
                               WorkCounter* work = nullptr);

/// sum_n |qoi_n - reference_n|^2
double path_squared_error(const std::vector<double>& qoi, const std::vector<double>& reference);

struct RunRecord {
    Method method = Method::mlenkf;
    int example = 1;
    Solver solver = Solver::exact;
    double epsilon = 0.0;
    int L = 0;
    double cost_units = 0.0;
    double wall_seconds = 0.0;
    double mse = 0.0;
    std::size_t realizations = 0;  // realizations that finished
    std::size_t failed = 0;        // non-finite or diverged, excluded
    double measured_work = 0.0;    // instrumented work per realization
};

/// Mean over finite entries; count of the rest goes to `failed`.
double mean_finite(const std::vector<double>& values, std::size_t* failed = nullptr);

/// Runs cfg.realizations independent filters (cfg.jobs at a time); the result
/// does not depend on cfg.jobs.
RunRecord estimate_mse(const ExperimentConfig& cfg, const Schedule& schedule,
                       const ObservationData& data);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

/// Least squares of log y on log x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);
/// log mse on log cost_units; needs >= 3 records with distinct costs.
SlopeFit fit_loglog_slope(const std::vector<RunRecord>& records);
/// mse * cost / L^3 per record (records with L = 0 give NaN).
std::vector<double> normalized_series(const std::vector<RunRecord>& records);
SlopeFit fit_normalized(const std::vector<RunRecord>& records);

}  // namespace mlenkf
