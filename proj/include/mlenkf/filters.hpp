#pragma once
// EnKF and multilevel EnKF with perturbed observations.
//
// Ensembles store one member per column. A multilevel ensemble holds, for
// each level l = 0..L, M_l coupled pairs (coarse at level l-1, fine at level
// l); the level-0 coarse block has zero rows.

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlenkf/model.hpp"
#include "mlenkf/observation.hpp"
#include "mlenkf/spectral.hpp"

namespace mlenkf {

struct Ensemble {
    int level = 0;
    Eigen::MatrixXd members;  // N_level x M

    std::size_t size() const { return static_cast<std::size_t>(members.cols()); }
    std::size_t modes() const { return static_cast<std::size_t>(members.rows()); }
    SpectralField member(std::size_t i) const;
};

/// M copies of project(u0, level).
Ensemble make_ensemble(const SpectralField& u0, int level, std::size_t members,
                       const LevelHierarchy& hierarchy);

struct LevelPairs {
    int level = 0;
    Eigen::MatrixXd coarse;  // N_{l-1} x M_l (0 x M_0 on level 0)
    Eigen::MatrixXd fine;    // N_l x M_l

    std::size_t size() const { return static_cast<std::size_t>(fine.cols()); }
};

struct MultilevelEnsemble {
    std::vector<LevelPairs> levels;  // index = level

    int max_level() const { return static_cast<int>(levels.size()) - 1; }
    std::vector<std::size_t> schedule() const;
    /// Throws ContractViolation unless levels are 0..L in order, every
    /// M_l >= 2 and block shapes match the hierarchy.
    void validate(const LevelHierarchy& hierarchy) const;
};

/// Pairs (project(u0, l-1), project(u0, l)) with M_l copies on level l.
MultilevelEnsemble make_multilevel_ensemble(const SpectralField& u0,
                                            const std::vector<std::size_t>& schedule,
                                            const LevelHierarchy& hierarchy);

/// Identifies one assimilation step of one filter realization; combined with
/// level and particle index to key every random draw.
struct FilterKeys {
    std::uint64_t seed = 0;
    std::uint32_t realization = 0;
    std::uint32_t step = 0;
};

SpectralField sample_mean(const Ensemble& e);

/// Cov_M[v, Hv] = X (H X)^T with X the centered members scaled by
/// 1/sqrt(M-1). N x m.
Eigen::MatrixXd sample_cov_action(const Eigen::Ref<const Eigen::MatrixXd>& members,
                                  const ObservationModel& obs);
Eigen::MatrixXd sample_cov_action(const Ensemble& e, const ObservationModel& obs);

/// Multilevel R = C^ML H^T accumulated level by level. N_L x m.
Eigen::MatrixXd compute_R_ml(const MultilevelEnsemble& ml, const ObservationModel& obs);

/// Sum of lambda_i q_i q_i^T over the eigenpairs of (A + A^T)/2 with
/// lambda_i >= 0.
Eigen::MatrixXd positive_part(const Eigen::MatrixXd& A);

namespace testing {
/// Fault injection for the verification suite: when enabled, positive_part
/// keeps the eigenvalues <= 0 instead.
void set_positive_part_fault(bool enabled);
}  // namespace testing

struct GainPack {
    Eigen::MatrixXd R;  // N x m
    Eigen::MatrixXd S;  // m x m, positive_part(H R) + Gamma
    Eigen::MatrixXd K;  // N x m, R S^{-1}
};

GainPack ml_gain(const Eigen::MatrixXd& R, const ObservationModel& obs);

/// Perturbed observation y + chol(Gamma) z for one particle.
Eigen::VectorXd perturbed_observation(const Eigen::VectorXd& y, const ObservationModel& obs,
                                      const FilterKeys& keys, int level, std::uint32_t particle);

/// v += Pi K (y~ - H v) for both members of every pair, one y~ per pair.
void ml_update(MultilevelEnsemble& ml, const GainPack& gain, const Eigen::VectorXd& y,
               const ObservationModel& obs, const FilterKeys& keys, WorkCounter* work = nullptr);

void ml_predict(MultilevelEnsemble& ml, const ModelConfig& cfg, const LevelHierarchy& hierarchy,
                const FilterKeys& keys, Solver solver, WorkCounter* work = nullptr);

/// Predict with Psi^L, then update with R = Cov_M[v, Hv]. Keys are drawn on
/// level e.level, so an EnKF and an MLEnKF with L = 0 sharing keys coincide.
/// Returns the gain used in the update.
GainPack enkf_step(Ensemble& e, const Eigen::VectorXd& y, const ObservationModel& obs,
               const ModelConfig& cfg, const LevelHierarchy& hierarchy, const FilterKeys& keys,
               Solver solver, WorkCounter* work = nullptr);

/// One MLEnKF assimilation step: predict, compute_R_ml, ml_gain, ml_update.
GainPack mlenkf_step(MultilevelEnsemble& ml, const Eigen::VectorXd& y, const ObservationModel& obs,
                 const ModelConfig& cfg, const LevelHierarchy& hierarchy, const FilterKeys& keys,
                 Solver solver, WorkCounter* work = nullptr);

double empirical_qoi(const Ensemble& e, const ObservationModel& obs);
double empirical_qoi(const MultilevelEnsemble& ml, const ObservationModel& obs);

}  // namespace mlenkf
