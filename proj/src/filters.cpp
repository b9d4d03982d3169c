#include "mlenkf/filters.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <atomic>
#include <span>
#include <string>

#include "mlenkf/errors.hpp"
#include "mlenkf/rng.hpp"

namespace mlenkf {

namespace {

std::atomic<bool> g_positive_part_fault{false};

std::span<double> column(Eigen::MatrixXd& m, Eigen::Index i) {
    return {m.col(i).data(), static_cast<std::size_t>(m.rows())};
}

RngKey particle_key(const FilterKeys& keys, Purpose purpose, int level, std::uint32_t particle) {
    return RngKey{keys.seed, purpose, keys.realization, static_cast<std::uint32_t>(level), particle,
                  keys.step};
}

// v += K_top (y~ - H v) for every column, K_top the first v.rows() rows of K.
void update_member(Eigen::MatrixXd& members, Eigen::Index i, const Eigen::MatrixXd& K,
                   const Eigen::VectorXd& y_tilde, const ObservationModel& obs) {
    const Eigen::Index n = members.rows();
    if (n == 0) return;
    const Eigen::VectorXd innovation = y_tilde - obs.H_modes(static_cast<std::size_t>(n)) * members.col(i);
    members.col(i).noalias() += K.topRows(n) * innovation;
}

}  // namespace

namespace testing {
void set_positive_part_fault(bool enabled) { g_positive_part_fault.store(enabled); }
}  // namespace testing

SpectralField Ensemble::member(std::size_t i) const {
    require(i < size(), "Ensemble::member: index out of range");
    return SpectralField{members.col(static_cast<Eigen::Index>(i)), level};
}

Ensemble make_ensemble(const SpectralField& u0, int level, std::size_t members,
                       const LevelHierarchy& hierarchy) {
    require(members >= 2, "make_ensemble: need M >= 2");
    const SpectralField p = project(u0, level, hierarchy);
    Ensemble e;
    e.level = level;
    e.members = p.coeffs.replicate(1, static_cast<Eigen::Index>(members));
    return e;
}

std::vector<std::size_t> MultilevelEnsemble::schedule() const {
    std::vector<std::size_t> m;
    m.reserve(levels.size());
    for (const auto& pairs : levels) m.push_back(pairs.size());
    return m;
}

void MultilevelEnsemble::validate(const LevelHierarchy& hierarchy) const {
    require(!levels.empty(), "MultilevelEnsemble: no levels");
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const LevelPairs& p = levels[l];
        const int level = static_cast<int>(l);
        require(p.level == level, "MultilevelEnsemble: levels must be stored in order 0..L");
        require(p.size() >= 2, "MultilevelEnsemble: every M_l must be at least 2");
        require(p.coarse.cols() == p.fine.cols(), "MultilevelEnsemble: pair count mismatch");
        require(static_cast<std::size_t>(p.fine.rows()) == hierarchy.modes(level),
                "MultilevelEnsemble: fine block on level " + std::to_string(l) + " has wrong size");
        const std::size_t coarse_rows = level == 0 ? 0 : hierarchy.modes(level - 1);
        require(static_cast<std::size_t>(p.coarse.rows()) == coarse_rows,
                "MultilevelEnsemble: coarse block on level " + std::to_string(l) + " has wrong size");
    }
}

MultilevelEnsemble make_multilevel_ensemble(const SpectralField& u0,
                                            const std::vector<std::size_t>& schedule,
                                            const LevelHierarchy& hierarchy) {
    require(!schedule.empty(), "make_multilevel_ensemble: empty schedule");
    MultilevelEnsemble ml;
    for (std::size_t l = 0; l < schedule.size(); ++l) {
        const int level = static_cast<int>(l);
        require(schedule[l] >= 2, "make_multilevel_ensemble: every M_l must be at least 2");
        const auto m = static_cast<Eigen::Index>(schedule[l]);
        LevelPairs pairs;
        pairs.level = level;
        pairs.fine = project(u0, level, hierarchy).coeffs.replicate(1, m);
        pairs.coarse = level == 0 ? Eigen::MatrixXd(0, m)
                                  : project(u0, level - 1, hierarchy).coeffs.replicate(1, m);
        ml.levels.push_back(std::move(pairs));
    }
    return ml;
}

SpectralField sample_mean(const Ensemble& e) {
    require(e.size() >= 1, "sample_mean: empty ensemble");
    return SpectralField{e.members.rowwise().mean(), e.level};
}

Eigen::MatrixXd sample_cov_action(const Eigen::Ref<const Eigen::MatrixXd>& members,
                                  const ObservationModel& obs) {
    const Eigen::Index m = members.cols();
    require(m >= 2, "sample_cov_action: need M >= 2");
    require(members.allFinite(), "sample_cov_action: non-finite ensemble member");
    const Eigen::VectorXd mean = members.rowwise().mean();
    const Eigen::MatrixXd X = members.colwise() - mean;
    const Eigen::MatrixXd HX = obs.apply_columns(X);
    return X * HX.transpose() / static_cast<double>(m - 1);
}

Eigen::MatrixXd sample_cov_action(const Ensemble& e, const ObservationModel& obs) {
    return sample_cov_action(e.members, obs);
}

Eigen::MatrixXd compute_R_ml(const MultilevelEnsemble& ml, const ObservationModel& obs) {
    require(!ml.levels.empty(), "compute_R_ml: no levels");
    const int L = ml.max_level();
    const Eigen::Index n_fine = ml.levels.back().fine.rows();
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n_fine, static_cast<Eigen::Index>(obs.obs_dim()));
    for (int l = 0; l < L; ++l) {
        const auto& here = ml.levels[static_cast<std::size_t>(l)].fine;
        const auto& next = ml.levels[static_cast<std::size_t>(l + 1)].coarse;
        require(here.rows() == next.rows(),
                "compute_R_ml: coarse block on level " + std::to_string(l + 1) +
                    " does not match the fine block on level " + std::to_string(l));
        require(here.rows() <= n_fine, "compute_R_ml: N_l must be nondecreasing");
        R.topRows(here.rows()) += sample_cov_action(here, obs) - sample_cov_action(next, obs);
    }
    R += sample_cov_action(ml.levels.back().fine, obs);
    return R;
}

Eigen::MatrixXd positive_part(const Eigen::MatrixXd& A) {
    require(A.rows() == A.cols(), "positive_part: matrix must be square");
    require(A.allFinite(), "positive_part: non-finite entries");
    const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    ensure(eig.info() == Eigen::Success, "positive_part: eigensolver failed");
    Eigen::VectorXd kept = eig.eigenvalues();
    const bool fault = g_positive_part_fault.load(std::memory_order_relaxed);
    for (Eigen::Index i = 0; i < kept.size(); ++i) {
        const bool keep = fault ? kept[i] <= 0.0 : kept[i] >= 0.0;
        if (!keep) kept[i] = 0.0;
    }
    const Eigen::MatrixXd& Q = eig.eigenvectors();
    return Q * kept.asDiagonal() * Q.transpose();
}

GainPack ml_gain(const Eigen::MatrixXd& R, const ObservationModel& obs) {
    require(R.cols() == static_cast<Eigen::Index>(obs.obs_dim()), "ml_gain: R must be N x m");
    require(R.allFinite(), "ml_gain: non-finite R");
    GainPack g;
    g.R = R;
    g.S = positive_part(obs.H_modes(static_cast<std::size_t>(R.rows())) * R) + obs.Gamma();
    const Eigen::LLT<Eigen::MatrixXd> llt(g.S);
    ensure(llt.info() == Eigen::Success, "ml_gain: S is not positive definite");
    g.K = llt.solve(R.transpose()).transpose();
    return g;
}

Eigen::VectorXd perturbed_observation(const Eigen::VectorXd& y, const ObservationModel& obs,
                                      const FilterKeys& keys, int level, std::uint32_t particle) {
    const auto m = static_cast<Eigen::Index>(obs.obs_dim());
    require(y.size() == m, "perturbed_observation: y must have m entries");
    Eigen::VectorXd z(m);
    NormalStream(particle_key(keys, Purpose::obs_perturbation, level, particle))
        .fill(0, std::span<double>(z.data(), static_cast<std::size_t>(m)));
    return y + obs.gamma_chol() * z;
}

void ml_update(MultilevelEnsemble& ml, const GainPack& gain, const Eigen::VectorXd& y,
               const ObservationModel& obs, const FilterKeys& keys, WorkCounter* work) {
    require(!ml.levels.empty(), "ml_update: no levels");
    require(gain.K.rows() == ml.levels.back().fine.rows() &&
                gain.K.cols() == static_cast<Eigen::Index>(obs.obs_dim()),
            "ml_update: gain must be N_L x m");
    for (auto& pairs : ml.levels) {
        const auto m_l = static_cast<Eigen::Index>(pairs.size());
        for (Eigen::Index i = 0; i < m_l; ++i) {
            const Eigen::VectorXd y_tilde =
                perturbed_observation(y, obs, keys, pairs.level, static_cast<std::uint32_t>(i));
            update_member(pairs.fine, i, gain.K, y_tilde, obs);
            update_member(pairs.coarse, i, gain.K, y_tilde, obs);
        }
        ensure(pairs.fine.allFinite() && pairs.coarse.allFinite(),
               "ml_update: non-finite member after update on level " + std::to_string(pairs.level));
        if (work) {
            work->update += static_cast<std::uint64_t>(obs.obs_dim()) *
                            static_cast<std::uint64_t>(pairs.fine.rows()) *
                            static_cast<std::uint64_t>(m_l);
        }
    }
}

void ml_predict(MultilevelEnsemble& ml, const ModelConfig& cfg, const LevelHierarchy& hierarchy,
                const FilterKeys& keys, Solver solver, WorkCounter* work) {
    for (auto& pairs : ml.levels) {
        const PairPropagator propagator(cfg, hierarchy, pairs.level, solver);
        for (Eigen::Index i = 0; i < pairs.fine.cols(); ++i) {
            const RngKey key =
                particle_key(keys, Purpose::forward, pairs.level, static_cast<std::uint32_t>(i));
            propagator.advance(column(pairs.coarse, i), column(pairs.fine, i), key, work);
        }
    }
}

GainPack enkf_step(Ensemble& e, const Eigen::VectorXd& y, const ObservationModel& obs,
               const ModelConfig& cfg, const LevelHierarchy& hierarchy, const FilterKeys& keys,
               Solver solver, WorkCounter* work) {
    require(e.size() >= 2, "enkf_step: need M >= 2");
    const PairPropagator propagator(cfg, hierarchy, e.level, solver);
    require(e.modes() == propagator.fine_modes(), "enkf_step: members do not match their level");
    for (Eigen::Index i = 0; i < e.members.cols(); ++i) {
        const RngKey key = particle_key(keys, Purpose::forward, e.level, static_cast<std::uint32_t>(i));
        propagator.advance({}, column(e.members, i), key, work);
    }
    const GainPack gain = ml_gain(sample_cov_action(e, obs), obs);
    for (Eigen::Index i = 0; i < e.members.cols(); ++i) {
        const Eigen::VectorXd y_tilde =
            perturbed_observation(y, obs, keys, e.level, static_cast<std::uint32_t>(i));
        update_member(e.members, i, gain.K, y_tilde, obs);
    }
    ensure(e.members.allFinite(), "enkf_step: non-finite member after update");
    if (work) {
        work->update += static_cast<std::uint64_t>(obs.obs_dim()) * e.modes() * e.size();
    }
    return gain;
}

GainPack mlenkf_step(MultilevelEnsemble& ml, const Eigen::VectorXd& y, const ObservationModel& obs,
                 const ModelConfig& cfg, const LevelHierarchy& hierarchy, const FilterKeys& keys,
                 Solver solver, WorkCounter* work) {
    ml.validate(hierarchy);
    ml_predict(ml, cfg, hierarchy, keys, solver, work);
    const GainPack gain = ml_gain(compute_R_ml(ml, obs), obs);
    ml_update(ml, gain, y, obs, keys, work);
    return gain;
}

double empirical_qoi(const Ensemble& e, const ObservationModel& obs) {
    require(e.size() >= 1, "empirical_qoi: empty ensemble");
    return obs.qoi_value(e.members.rowwise().mean());
}

double empirical_qoi(const MultilevelEnsemble& ml, const ObservationModel& obs) {
    double total = 0.0;
    for (const auto& pairs : ml.levels) {
        require(pairs.size() >= 1, "empirical_qoi: empty level");
        const double fine = obs.qoi_value(pairs.fine.rowwise().mean());
        const double coarse = pairs.coarse.rows() == 0 ? 0.0 : obs.qoi_value(pairs.coarse.rowwise().mean());
        total += fine - coarse;
    }
    return total;
}

}  // namespace mlenkf
