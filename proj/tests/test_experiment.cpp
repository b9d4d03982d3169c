#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mlenkf/errors.hpp"
#include "mlenkf/experiment.hpp"
#include "mlenkf/kalman.hpp"

using namespace mlenkf;

namespace {

LevelHierarchy ex1_ladder(bool stepping) { return LevelHierarchy::equilibrated(0.0, 0.5, 1, 1, 0.25, stepping); }

ExperimentConfig small_config(Method method, Solver solver, std::size_t realizations = 4) {
    ExperimentOptions o;
    o.n_ref = 64;
    o.steps = 4;
    o.realizations = realizations;
    o.method = method;
    o.solver = solver;
    o.seed = 77;
    return make_experiment(o);
}

}  // namespace

TEST_CASE("schedules") {
    CHECK(make_schedule(0.125, ex1_ladder(false), Method::mlenkf).L == 3);

    const Schedule full = make_schedule(0.125, ex1_ladder(true), Method::mlenkf);
    CHECK(full.M == std::vector<std::size_t>{576, 144, 36, 9});
    const Schedule space = make_schedule(0.125, ex1_ladder(false), Method::mlenkf);
    CHECK(space.M == std::vector<std::size_t>{64, 23, 8, 3});

    const Schedule enkf = make_schedule(0.125, ex1_ladder(false), Method::enkf);
    CHECK(enkf.L == 3);
    CHECK(enkf.M == std::vector<std::size_t>{64});

    // beta < d gamma_x + gamma_t branch: h_l^{(beta+g)/2} h_L^{-(beta+g)/2}
    LevelHierarchy slow = ex1_ladder(true);
    slow.gamma_t = 2.0;  // growth 3 > beta 2
    const Schedule third = make_schedule(0.125, slow, Method::mlenkf);
    CHECK(third.M == std::vector<std::size_t>{182, 32, 6, 2});  // 2^{2.5 (3 - l)}

    const Schedule tiny = make_schedule(1.5, ex1_ladder(false), Method::enkf);
    CHECK(tiny.L == 0);
    CHECK(tiny.M[0] == 2);
    CHECK(tiny.clamped);
    const Schedule coarse = make_schedule(2.0, ex1_ladder(false), Method::mlenkf);
    CHECK(coarse.L == 0);
    CHECK(coarse.M == std::vector<std::size_t>{2});
    CHECK(coarse.clamped);

    CHECK_THROWS_AS(make_schedule(0.0, ex1_ladder(false), Method::enkf), ContractViolation);
}

TEST_CASE("schedules grow as epsilon shrinks") {
    for (bool stepping : {false, true}) {
        Schedule prev = make_schedule(0.5, ex1_ladder(stepping), Method::mlenkf);
        for (double eps = 0.45; eps > 2e-3; eps *= 0.9) {
            const Schedule s = make_schedule(eps, ex1_ladder(stepping), Method::mlenkf);
            CHECK(s.L >= prev.L);
            for (std::size_t l = 0; l < prev.M.size(); ++l) CHECK(s.M[l] >= prev.M[l]);
            CHECK(std::is_sorted(s.M.rbegin(), s.M.rend()));
            prev = s;
        }
    }
}

TEST_CASE("theoretical cost") {
    LevelHierarchy h = ex1_ladder(false);
    h.n0 = 4;
    Schedule s;
    s.method = Method::mlenkf;
    s.L = 0;
    s.M = {10};
    CHECK(theoretical_cost(s, h, Solver::exact, 1, 1) == 80.0);
    s.M = {20};
    CHECK(theoretical_cost(s, h, Solver::exact, 1, 1) == 160.0);

    // exponential Euler: cost Psi^l = N_l J_l = 4^l on N0 = J0 = 1.
    const LevelHierarchy e = ex1_ladder(true);
    Schedule one;
    one.method = Method::mlenkf;
    one.L = 3;
    one.M = {1, 0, 0, 0};
    const double c0 = theoretical_cost(one, e, Solver::expeuler, 1, 0);
    for (std::size_t l = 1; l <= 3; ++l) {
        Schedule shifted = one;
        shifted.M = {0, 0, 0, 0};
        shifted.M[l] = 1;
        // level l runs Psi^l and Psi^{l-1}: 4^l + 4^{l-1}
        CHECK(theoretical_cost(shifted, e, Solver::expeuler, 1, 0) == std::pow(4.0, l) + std::pow(4.0, l - 1.0));
    }
    CHECK(c0 == 1.0);

    Schedule en;
    en.method = Method::enkf;
    en.L = 2;
    en.M = {7};
    CHECK(theoretical_cost(en, e, Solver::expeuler, 3, 1) == 7.0 * (16.0 + 4.0) * 3.0);
}

TEST_CASE("truth and observations") {
    const ExperimentConfig cfg = small_config(Method::mlenkf, Solver::exact);
    const auto truth = simulate_truth(cfg.problem, cfg.steps, cfg.seed);
    CHECK(truth.size() == cfg.steps + 1);
    CHECK(truth[0] == cfg.problem.u0);
    const auto exact_y = observe_truth(truth, cfg.problem.obs, cfg.seed, 0.0);
    for (std::size_t n = 1; n <= cfg.steps; ++n) CHECK(exact_y[n - 1] == cfg.problem.obs.H() * truth[n]);

    const ObservationData a = synthesize_truth_and_obs(cfg), b = synthesize_truth_and_obs(cfg);
    CHECK(a.y == b.y);
    CHECK(a.reference_qoi == b.reference_qoi);
    CHECK(a.reference_qoi.size() == cfg.steps + 1);
    CHECK(a.reference_qoi[0] == cfg.problem.obs.qoi_value(cfg.problem.u0));
}

TEST_CASE("example presets") {
    const auto ex2 = make_example(2, 8);
    CHECK(ex2.obs.H()(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(ex2.obs.H()(0, 1) == 0.0);
    CHECK(ex2.obs.H()(0, 2) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
    CHECK(ex2.obs.qoi() == Eigen::VectorXd::Ones(8));
    CHECK(ex2.model.b == doctest::Approx(0.501));
    CHECK(ex2.model.r1 == doctest::Approx(0.2505));
    CHECK(ex2.model.r2 == doctest::Approx(0.7505));
    CHECK(ex2.u0[1] == doctest::Approx(std::pow(2.0, -1.999)));

    const auto ex1 = make_example(1, 8);
    CHECK(ex1.obs.H()(0, 0) == 1.0);
    CHECK(ex1.obs.H()(0, 1) == 0.0);
    CHECK(ex1.obs.H()(0, 2) == doctest::Approx(-std::pow(3.0, -0.501)));
    CHECK(ex1.obs.H()(0, 4) == doctest::Approx(std::pow(5.0, -0.501)));
    CHECK(ex1.obs.qoi()[3] == doctest::Approx(std::pow(4.0, -0.501)));
    CHECK(ex1.u0[2] == doctest::Approx(std::pow(3.0, -1.501)));
    CHECK(ex1.obs.Gamma()(0, 0) == 0.25);
    CHECK_THROWS_AS(make_example(3, 8), ContractViolation);
}

TEST_CASE("MSE bookkeeping") {
    const std::vector<double> ref{1.0, 2.0, 3.0};
    CHECK(path_squared_error(ref, ref) == 0.0);
    CHECK(path_squared_error({1.0, 2.5, 2.0}, ref) == 1.25);

    std::vector<double> errs{0.3, 0.1, std::nan(""), 0.5};
    std::size_t failed = 0;
    const double m = mean_finite(errs, &failed);
    CHECK(failed == 1);
    CHECK(m == doctest::Approx(0.3));
    std::reverse(errs.begin(), errs.end());
    CHECK(mean_finite(errs) == doctest::Approx(m));
}

TEST_CASE("filter paths start at the projected initial QoI") {
    for (Method method : {Method::enkf, Method::mlenkf}) {
        const ExperimentConfig cfg = small_config(method, Solver::expeuler);
        const Schedule s = make_schedule(0.25, cfg.hierarchy, method);
        const ObservationData data = synthesize_truth_and_obs(cfg);
        const auto q = run_filter(cfg, s, data, 0);
        CHECK(q.size() == cfg.steps + 1);
        const auto n_L = static_cast<Eigen::Index>(cfg.hierarchy.modes(s.L));
        CHECK(q[0] == doctest::Approx(cfg.problem.obs.qoi_value(cfg.problem.u0.head(n_L))).epsilon(1e-14));
    }
}

TEST_CASE("estimate_mse is independent of the job count") {
    ExperimentConfig cfg = small_config(Method::mlenkf, Solver::exact, 6);
    const ObservationData data = synthesize_truth_and_obs(cfg);
    const Schedule s = make_schedule(0.125, cfg.hierarchy, Method::mlenkf);
    const RunRecord one = estimate_mse(cfg, s, data);
    cfg.jobs = 3;
    const RunRecord three = estimate_mse(cfg, s, data);
    CHECK(one.mse == three.mse);
    CHECK(one.realizations == 6);
    CHECK(one.failed == 0);
    CHECK(one.cost_units == theoretical_cost(s, cfg.hierarchy, cfg.solver, cfg.steps, 1));
    CHECK(one.measured_work == one.cost_units);
}

TEST_CASE("EnKF MSE scales like 1/M") {
    // Statistical gate: the ratio MSE(M)/MSE(4M) must be within three
    // standard errors (delta method over realizations) of 4.
    ExperimentOptions o;
    o.n_ref = 64;
    o.n0 = 64;  // level 0 resolves everything: no bias
    o.steps = 3;
    o.realizations = 200;
    o.method = Method::enkf;
    o.seed = 5;
    const ExperimentConfig cfg = make_experiment(o);
    const ObservationData data = synthesize_truth_and_obs(cfg);
    auto per_realization = [&](std::size_t M) {
        Schedule s;
        s.method = Method::enkf;
        s.L = 0;
        s.M = {M};
        std::vector<double> e;
        for (std::uint32_t r = 0; r < cfg.realizations; ++r)
            e.push_back(path_squared_error(run_filter(cfg, s, data, r), data.reference_qoi));
        return e;
    };
    auto stats = [](const std::vector<double>& e) {
        double m = 0.0, v = 0.0;
        for (double x : e) m += x;
        m /= e.size();
        for (double x : e) v += (x - m) * (x - m);
        return std::pair{m, v / (e.size() - 1) / e.size()};
    };
    const auto [m1, v1] = stats(per_realization(25));
    const auto [m4, v4] = stats(per_realization(100));
    const double ratio = m1 / m4;
    const double se = ratio * std::sqrt(v1 / (m1 * m1) + v4 / (m4 * m4));
    CAPTURE(ratio);
    CAPTURE(se);
    CHECK(std::abs(ratio - 4.0) <= 3.0 * se);
}

TEST_CASE("log-log slope fits") {
    std::vector<double> x, y, flat;
    for (double c : {10.0, 100.0, 1e3, 1e4}) {
        x.push_back(c);
        y.push_back(1.0 / c);
        flat.push_back(0.3);
    }
    CHECK(fit_loglog(x, y).slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(fit_loglog(x, flat).slope) < 1e-12);

    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> jitter(0.9, 1.1);
    std::vector<double> noisy;
    for (double c : x) noisy.push_back(5.0 * std::pow(c, -2.0 / 3.0) * jitter(rng));
    CHECK(std::abs(fit_loglog(x, noisy).slope + 2.0 / 3.0) <= 0.1);

    std::vector<RunRecord> two(2);
    CHECK_THROWS_AS(fit_loglog_slope(two), ContractViolation);
    CHECK_THROWS_AS(fit_loglog({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), ContractViolation);

    std::vector<RunRecord> recs;
    for (int L = 1; L <= 4; ++L) {
        RunRecord r;
        r.L = L;
        r.cost_units = std::pow(4.0, L) * L * L;
        r.mse = L / r.cost_units;  // mse * cost / L^3 = 1/L^2
        recs.push_back(r);
    }
    const auto series = normalized_series(recs);
    CHECK(series[1] == doctest::Approx(0.25));
    CHECK(fit_normalized(recs).slope < 0.0);
}

TEST_CASE("regime warnings") {
    const ExperimentConfig cfg = small_config(Method::mlenkf, Solver::exact);
    const Schedule s = make_schedule(0.125, cfg.hierarchy, Method::mlenkf);
    const auto w = regime_warnings(cfg, s);
    REQUIRE(w.size() == 1);  // m = 1 = N_0
    CHECK(w[0].find("m = 1") != std::string::npos);
}

TEST_CASE("method and solver names round-trip") {
    for (Method m : {Method::enkf, Method::mlenkf}) CHECK(parse_method(method_name(m)) == m);
    for (Solver s : {Solver::exact, Solver::expeuler}) CHECK(parse_solver(solver_name(s)) == s);
    CHECK_THROWS_AS(parse_method("mc"), ContractViolation);
}
