// Small-scale property checks behind `mlenkf verify`.

#include <Eigen/Eigenvalues>
#include <bit>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "mlenkf/cli.hpp"
#include "mlenkf/csv.hpp"
#include "mlenkf/errors.hpp"
#include "mlenkf/filters.hpp"
#include "mlenkf/kalman.hpp"
#include "mlenkf/oracles.hpp"
#include "mlenkf/presets.hpp"

namespace mlenkf {

namespace {

struct Check {
    std::string name;
    std::function<bool(std::string&)> run;
};

std::string num(double v) { return format_double(v); }

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd A(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) A(i, j) = normal(rng);
    return A;
}

ObservationModel random_obs(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n_ref) {
    Eigen::MatrixXd G = random_matrix(rng, m, m);
    return ObservationModel(random_matrix(rng, m, n_ref),
                            G * G.transpose() + Eigen::MatrixXd::Identity(m, m),
                            random_matrix(rng, n_ref, 1).col(0));
}

// Random L <= 3 ensemble on a N0 = 1, kappa = 2 ladder (N_L <= 8).
MultilevelEnsemble random_ml(std::mt19937_64& rng, const LevelHierarchy& h) {
    std::uniform_int_distribution<int> levels(0, 3), sizes(2, 7);
    const int L = levels(rng);
    MultilevelEnsemble ml;
    for (int l = 0; l <= L; ++l) {
        const Eigen::Index m = sizes(rng);
        LevelPairs p;
        p.level = l;
        p.fine = random_matrix(rng, static_cast<Eigen::Index>(h.modes(l)), m);
        p.coarse = l == 0 ? Eigen::MatrixXd(0, m)
                          : random_matrix(rng, static_cast<Eigen::Index>(h.modes(l - 1)), m);
        ml.levels.push_back(std::move(p));
    }
    return ml;
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

std::vector<Check> build_checks(const VerifyOptions& opt) {
    std::vector<Check> checks;
    const std::uint64_t seed = opt.seed;

    checks.push_back({"spectral: projection contracts every K_r norm", [seed](std::string& d) {
        std::mt19937_64 rng(seed);
        LevelHierarchy h;
        double worst = -1.0;
        for (int trial = 0; trial < 50; ++trial) {
            SpectralField u{random_matrix(rng, 16, 1).col(0), 4};
            for (int l = -1; l <= 4; ++l) {
                for (double r : {-0.5, 0.0, 0.5, 1.0}) {
                    worst = std::max(worst, fractional_norm(project(u, l, h), r) - fractional_norm(u, r));
                }
            }
        }
        d = "max excess " + num(worst);
        return worst <= 0.0;
    }});

    checks.push_back({"spectral: Pythagoras over projection and tail", [seed](std::string& d) {
        std::mt19937_64 rng(seed + 1);
        LevelHierarchy h;
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            SpectralField u{random_matrix(rng, 16, 1).col(0), 4};
            for (int l = 0; l <= 4; ++l) {
                const auto n = static_cast<Eigen::Index>(h.modes(l));
                Eigen::VectorXd tail = u.coeffs;
                tail.head(n).setZero();
                for (double r : {0.0, 0.25, 0.75}) {
                    const double whole = std::pow(fractional_norm(u, r), 2);
                    const double parts = std::pow(fractional_norm(project(u, l, h), r), 2) +
                                         std::pow(fractional_norm(tail, r), 2);
                    worst = std::max(worst, std::abs(whole - parts) / whole);
                }
            }
        }
        d = "max relative gap " + num(worst);
        return worst <= 1e-13;
    }});

    checks.push_back({"spectral: 1/h_l = N_l", [](std::string& d) {
        for (double kappa : {2.0, 1.5, 3.0}) {
            LevelHierarchy h;
            h.kappa = kappa;
            h.n0 = 3;
            for (int l = 0; l <= 8; ++l) {
                const LevelParams p = level_params(h, l);
                // 1/(1/N) is exact for powers of two; otherwise one rounding
                // of 1/N is unavoidable.
                const double n = static_cast<double>(p.modes);
                const double tol = std::has_single_bit(p.modes) ? 0.0 : 2.3e-16 * n;
                if (std::abs(1.0 / p.mesh_width - n) > tol) {
                    d = "kappa " + num(kappa) + " level " + std::to_string(l);
                    return false;
                }
            }
        }
        return true;
    }});

    checks.push_back({"model: coupled coarse increment variance (3 standard errors)", [seed](std::string& d) {
        const ModelConfig cfg = make_example(1, 1).model;
        LevelHierarchy h = LevelHierarchy::equilibrated(cfg.r1, cfg.r2, 16, 1, cfg.horizon, true);
        const int level = 2;
        const LevelParams fine = level_params(h, level);
        const LevelParams coarse = level_params(h, level - 1);
        std::vector<std::vector<double>> samples(3);
        const std::size_t modes[3] = {1, 4, 16};
        std::uint32_t particle = 0;
        while (samples[0].size() < 100000) {
            const NoiseBlock block = draw_noise_block(level, cfg, h, {seed, Purpose::forward, 0, 2, particle++, 0});
            for (std::size_t k = 0; 2 * k + 1 < block.step_count; ++k) {
                for (int s = 0; s < 3; ++s) {
                    const std::size_t j = modes[s] - 1;
                    const double w = std::exp(-mode_eigenvalue(modes[s]) * fine.time_step);
                    samples[static_cast<std::size_t>(s)].push_back(w * block(2 * k, j) + block(2 * k + 1, j));
                }
            }
        }
        std::ostringstream msg;
        bool ok = true;
        for (int s = 0; s < 3; ++s) {
            const auto& x = samples[static_cast<std::size_t>(s)];
            double mean = 0.0, ss = 0.0;
            for (double v : x) mean += v;
            mean /= static_cast<double>(x.size());
            for (double v : x) ss += (v - mean) * (v - mean);
            const double var = ss / static_cast<double>(x.size() - 1);
            const double theory = substep_noise_variance(mode_eigenvalue(modes[s]), coarse.time_step, cfg.b);
            const double z = (var - theory) / (theory * std::sqrt(2.0 / static_cast<double>(x.size() - 1)));
            msg << "j=" << modes[s] << " z=" << num(std::round(z * 100) / 100) << ' ';
            ok = ok && std::abs(z) <= 3.0;
        }
        d = msg.str();
        return ok;
    }});

    checks.push_back({"model: exact-in-time coarse output equals projected fine output", [seed](std::string& d) {
        const ModelConfig cfg = make_example(1, 64).model;
        const LevelHierarchy h = LevelHierarchy::equilibrated(cfg.r1, cfg.r2, 1, 1, cfg.horizon, false);
        const Eigen::VectorXd u0 = make_example(1, 64).u0;
        for (int l = 1; l <= 6; ++l) {
            const SpectralField fine = project({u0, 6}, l, h);
            const SpectralField coarse = project({u0, 6}, l - 1, h);
            const auto [c, f] = forward_pair(coarse, fine, l, cfg, h, {seed, Purpose::forward, 0, 1, 7, 3}, Solver::exact);
            if (project(f, l - 1, h).coeffs != c.coeffs) {
                d = "level " + std::to_string(l);
                return false;
            }
        }
        return true;
    }});

    checks.push_back({"model: g(lambda, dt) < 1", [](std::string& d) {
        double worst = 0.0;
        for (std::size_t j = 1; j <= 4096; j *= 2)
            for (double dt : {1e-8, 1e-4, 1e-2, 0.25, 1.0, 10.0})
                worst = std::max(worst, euler_factor(mode_eigenvalue(j), dt));
        d = "max g " + num(worst);
        return worst < 1.0;
    }});

    checks.push_back({"model: identical keys give bit-identical paths", [seed](std::string& d) {
        const auto p = make_example(1, 64);
        const LevelHierarchy h = LevelHierarchy::equilibrated(p.model.r1, p.model.r2, 1, 1, p.model.horizon, true);
        const RngKey key{seed, Purpose::forward, 3, 4, 5, 6};
        const auto fine = project({p.u0, 6}, 4, h);
        const auto coarse = project({p.u0, 6}, 3, h);
        const auto a = forward_pair(coarse, fine, 4, p.model, h, key, Solver::expeuler);
        const auto b = forward_pair(coarse, fine, 4, p.model, h, key, Solver::expeuler);
        const bool same = a.first.coeffs == b.first.coeffs && a.second.coeffs == b.second.coeffs;
        if (!same) d = "repeat differs";
        return same;
    }});

    checks.push_back({"filters: positive_part output is PSD", [seed](std::string& d) {
        std::mt19937_64 rng(seed + 2);
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            const Eigen::Index m = 1 + static_cast<Eigen::Index>(trial % 6);
            const Eigen::MatrixXd A = random_matrix(rng, m, m);
            const Eigen::MatrixXd P = positive_part(A);
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
            worst = std::min(worst, eig.eigenvalues().minCoeff());
        }
        d = "min eigenvalue " + num(worst);
        return worst >= -1e-10;
    }});

    checks.push_back({"filters: compute_R_ml matches dense telescoping oracle", [seed](std::string& d) {
        std::mt19937_64 rng(seed + 3);
        LevelHierarchy h;
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const MultilevelEnsemble ml = random_ml(rng, h);
            const ObservationModel obs = random_obs(rng, 1 + trial % 3, 8);
            worst = std::max(worst, relative_error(compute_R_ml(ml, obs), oracle::telescoping_R(ml, obs)));
        }
        d = "max relative error " + num(worst);
        return worst <= 1e-12;
    }});

    checks.push_back({"filters: MLEnKF with L = 0 equals EnKF", [seed](std::string& d) {
        const auto p = make_example(1, 32);
        LevelHierarchy h = LevelHierarchy::equilibrated(p.model.r1, p.model.r2, 4, 1, p.model.horizon, true);
        const SpectralField u0{p.u0, 5};
        Ensemble e = make_ensemble(u0, 0, 9, h);
        MultilevelEnsemble ml = make_multilevel_ensemble(u0, {9}, h);
        double worst = 0.0;
        for (std::uint32_t n = 1; n <= 10; ++n) {
            const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.1 * n);
            const FilterKeys keys{seed, 5, n};
            enkf_step(e, y, p.obs, p.model, h, keys, Solver::expeuler);
            mlenkf_step(ml, y, p.obs, p.model, h, keys, Solver::expeuler);
            worst = std::max(worst, (e.members - ml.levels[0].fine).cwiseAbs().maxCoeff());
        }
        d = "max difference " + num(worst);
        return worst <= 1e-14;
    }});

    checks.push_back({"filters: sample covariance is unbiased (4 standard errors)", [seed](std::string& d) {
        std::mt19937_64 rng(seed + 4);
        const Eigen::Index n = 3, M = 5;
        const int trials = 10000;
        Eigen::MatrixXd A(n, n);
        A << 1.0, 0.0, 0.0, 0.5, 0.8, 0.0, -0.3, 0.2, 0.6;
        const Eigen::MatrixXd C = A * A.transpose();
        const ObservationModel obs(Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n),
                                   Eigen::VectorXd::Ones(n));
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n), sum_sq = Eigen::MatrixXd::Zero(n, n);
        for (int t = 0; t < trials; ++t) {
            const Eigen::MatrixXd members = A * random_matrix(rng, n, M);
            const Eigen::MatrixXd S = sample_cov_action(members, obs);
            sum += S;
            sum_sq += S.cwiseAbs2();
        }
        const Eigen::MatrixXd mean = sum / trials;
        const Eigen::MatrixXd var = (sum_sq / trials - mean.cwiseAbs2()) * trials / (trials - 1.0);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                worst = std::max(worst, std::abs(mean(i, j) - C(i, j)) / std::sqrt(var(i, j) / trials));
        d = "max |z| " + num(std::round(worst * 100) / 100);
        return worst <= 4.0;
    }});

    checks.push_back({"filters: ml_gain on the exact covariance reproduces the Kalman gain", [](std::string& d) {
        const auto p = make_example(2, 64);
        GaussianState s = GaussianState::point_mass(p.u0);
        double worst = 0.0;
        for (int n = 1; n <= 5; ++n) {
            kalman_predict(s, p.model);
            const GainPack k = kalman_gain(s, p.obs);
            const GainPack g = ml_gain(s.cov_times(p.obs.H().transpose()), p.obs);
            worst = std::max(worst, relative_error(g.K, k.K));
            kalman_update(s, Eigen::VectorXd::Constant(1, 0.3), p.obs);
        }
        d = "max relative error " + num(worst);
        return worst <= 1e-12;
    }});

    checks.push_back({"filters: updates stay finite over a filter run", [seed](std::string& d) {
        ExperimentOptions o;
        o.n_ref = 64;
        o.steps = 5;
        o.realizations = 2;
        o.seed = seed;
        o.solver = Solver::expeuler;
        const ExperimentConfig cfg = make_experiment(o);
        const ObservationData data = synthesize_truth_and_obs(cfg);
        const Schedule s = make_schedule(0.125, cfg.hierarchy, Method::mlenkf);
        const auto q = run_filter(cfg, s, data, 0);
        for (double v : q)
            if (!std::isfinite(v)) return false;
        d = std::to_string(q.size()) + " QoI values";
        return true;
    }});

    checks.push_back({"kalman: low-rank covariance matches dense recursion", [seed](std::string& d) {
        const auto p = make_example(1, 64);
        GaussianState s = GaussianState::point_mass(p.u0);
        oracle::DenseGaussian dense{p.u0, Eigen::MatrixXd::Zero(64, 64)};
        std::mt19937_64 rng(seed + 5);
        double worst = 0.0, cert = 1.0;
        for (int n = 1; n <= 5; ++n) {
            const Eigen::VectorXd y = random_matrix(rng, 1, 1).col(0);
            kalman_step(s, y, p.obs, p.model);
            oracle::kalman_step(dense, y, p.obs, p.model);
            worst = std::max(worst, (s.dense_covariance() - dense.cov).cwiseAbs().maxCoeff());
            worst = std::max(worst, (s.mean - dense.mean).cwiseAbs().maxCoeff());
            cert = std::min(cert, s.psd_certificate());
        }
        d = "max difference " + num(worst) + ", certificate " + num(cert);
        return worst <= 1e-10 && cert >= -1e-12;
    }});

    checks.push_back({"experiment: reference sequence does not depend on the filter", [seed](std::string& d) {
        ExperimentOptions o;
        o.n_ref = 64;
        o.steps = 4;
        o.seed = seed;
        o.realizations = 2;
        const ExperimentConfig ml = make_experiment(o);
        o.method = Method::enkf;
        o.solver = Solver::expeuler;
        const ExperimentConfig en = make_experiment(o);
        const auto a = synthesize_truth_and_obs(ml);
        const auto b = synthesize_truth_and_obs(en);
        const bool same = a.reference_qoi == b.reference_qoi;
        if (!same) d = "references differ";
        return same;
    }});

    checks.push_back({"experiment: make_schedule is monotone in epsilon", [](std::string& d) {
        for (bool stepping : {false, true}) {
            const LevelHierarchy h = LevelHierarchy::equilibrated(0.0, 0.5, 1, 1, 0.25, stepping);
            for (Method m : {Method::enkf, Method::mlenkf}) {
                Schedule prev = make_schedule(0.9, h, m);
                for (double eps = 0.9 * 0.83; eps > 1e-3; eps *= 0.83) {
                    const Schedule s = make_schedule(eps, h, m);
                    if (s.L < prev.L) return false;
                    const std::size_t shared = m == Method::enkf ? 1 : prev.M.size();
                    for (std::size_t l = 0; l < shared; ++l) {
                        if (s.M[l] < prev.M[l]) {
                            d = "eps " + num(eps) + " level " + std::to_string(l);
                            return false;
                        }
                    }
                    prev = s;
                }
            }
        }
        return true;
    }});

    checks.push_back({"experiment: cost model matches instrumented work (5%)", [seed](std::string& d) {
        std::ostringstream msg;
        double worst = 0.0;
        for (Solver solver : {Solver::exact, Solver::expeuler}) {
            for (Method method : {Method::enkf, Method::mlenkf}) {
                ExperimentOptions o;
                o.n_ref = 64;
                o.steps = 3;
                o.seed = seed;
                o.realizations = 2;
                o.solver = solver;
                o.method = method;
                const ExperimentConfig cfg = make_experiment(o);
                const ObservationData data = synthesize_truth_and_obs(cfg);
                const Schedule s = make_schedule(0.125, cfg.hierarchy, method);
                WorkCounter w;
                run_filter(cfg, s, data, 0, &w);
                const double model = theoretical_cost(s, cfg.hierarchy, solver, cfg.steps, 1);
                worst = std::max(worst, std::abs(static_cast<double>(w.total()) - model) / model);
            }
        }
        d = "max relative gap " + num(worst);
        return worst <= 0.05;
    }});

    checks.push_back({"cli: CSV numbers use '.' and round-trip", [](std::string& d) {
        for (double v : {0.1, 1e-300, 123456.789, -2.5}) {
            const std::string s = format_double(v);
            if (s.find(',') != std::string::npos || std::stod(s) != v) {
                d = s;
                return false;
            }
        }
        return true;
    }});

    return checks;
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
    testing::set_positive_part_fault(options.inject_positive_part_fault);
    std::vector<CheckResult> results;
    for (const auto& check : build_checks(options)) {
        CheckResult r{check.name, false, {}};
        try {
            r.passed = check.run(r.detail);
        } catch (const std::exception& e) {
            r.detail = std::string("exception: ") + e.what();
        }
        results.push_back(std::move(r));
    }
    testing::set_positive_part_fault(false);
    return results;
}

}  // namespace mlenkf
