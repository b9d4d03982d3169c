#pragma once
// Dense, deliberately naive reference computations used to cross-check the
// production paths in tests and in `mlenkf verify`. Not for production use:
// everything here materializes N x N matrices.

#include <Eigen/Core>

#include "mlenkf/filters.hpp"
#include "mlenkf/model.hpp"
#include "mlenkf/observation.hpp"

namespace mlenkf::oracle {

/// (M/(M-1)) (E_M[v v^T] - E_M[v] E_M[v]^T), evaluated in two explicit
/// passes (mean first, then centered outer products).
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& members);

/// sample_covariance(members) H_N^T.
Eigen::MatrixXd cov_action(const Eigen::MatrixXd& members, const ObservationModel& obs);

/// Telescoping multilevel covariance, every level zero-padded to N_L, times
/// H^T.
Eigen::MatrixXd telescoping_R(const MultilevelEnsemble& ml, const ObservationModel& obs);

struct DenseGaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Textbook Kalman predict/update with dense covariance; returns the gain.
Eigen::MatrixXd kalman_step(DenseGaussian& state, const Eigen::VectorXd& y,
                            const ObservationModel& obs, const ModelConfig& cfg);

}  // namespace mlenkf::oracle
