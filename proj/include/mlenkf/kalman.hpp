#pragma once
// Exact Kalman filter for the linear-Gaussian model (the mean-field limit of
// the EnKF). The covariance is kept as diag(d) - sum_k s_k f_k f_k^T, which
// is exact here: the initial state is deterministic and prediction is
// diagonal in the mode basis, so each update adds m factors.

#include <Eigen/Core>
#include <cstddef>

#include "mlenkf/filters.hpp"
#include "mlenkf/model.hpp"
#include "mlenkf/observation.hpp"

namespace mlenkf {

struct GaussianState {
    Eigen::VectorXd mean;
    Eigen::VectorXd cov_diag;
    Eigen::MatrixXd factors;  // n x r
    Eigen::VectorXd signs;    // r entries, each +1 or -1

    /// Deterministic initial state (zero covariance).
    static GaussianState point_mass(const Eigen::VectorXd& mean);

    std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
    std::size_t rank() const { return static_cast<std::size_t>(factors.cols()); }

    /// C B without forming C.
    Eigen::MatrixXd cov_times(const Eigen::MatrixXd& B) const;
    /// n x n covariance; for tests and small n only.
    Eigen::MatrixXd dense_covariance() const;
    /// Smallest eigenvalue of the r x r Gram test matrix; C is PSD iff this
    /// is >= 0 (requires a positive diagonal when factors are present).
    double psd_certificate() const;
};

/// mean <- a mean, C <- a C a + Q, a_j = e^{(1-lambda_j)T}.
void kalman_predict(GaussianState& state, const ModelConfig& cfg);

/// P = C H^T, S = H P + Gamma, K = P S^{-1}, packed as (R = P, S, K).
GainPack kalman_gain(const GaussianState& state, const ObservationModel& obs);

void kalman_update(GaussianState& state, const Eigen::VectorXd& y, const ObservationModel& obs);

/// Predict followed by update; returns the gain used in the update.
GainPack kalman_step(GaussianState& state, const Eigen::VectorXd& y, const ObservationModel& obs,
                     const ModelConfig& cfg);

}  // namespace mlenkf
