#include "mlenkf/oracles.hpp"

#include <Eigen/LU>
#include <cmath>

#include "mlenkf/errors.hpp"
#include "mlenkf/spectral.hpp"

namespace mlenkf::oracle {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& members) {
    const Eigen::Index n = members.rows();
    const Eigen::Index m = members.cols();
    require(m >= 2, "oracle::sample_covariance: need M >= 2");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) mean += members.col(i);
    mean /= static_cast<double>(m);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index a = 0; a < n; ++a) {
            for (Eigen::Index b = 0; b < n; ++b) {
                cov(a, b) += (members(a, i) - mean[a]) * (members(b, i) - mean[b]);
            }
        }
    }
    return cov / static_cast<double>(m - 1);
}

Eigen::MatrixXd cov_action(const Eigen::MatrixXd& members, const ObservationModel& obs) {
    return sample_covariance(members) * obs.H_modes(static_cast<std::size_t>(members.rows())).transpose();
}

Eigen::MatrixXd telescoping_R(const MultilevelEnsemble& ml, const ObservationModel& obs) {
    const Eigen::Index n = ml.levels.back().fine.rows();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    for (const auto& pairs : ml.levels) {
        const Eigen::Index nf = pairs.fine.rows();
        C.topLeftCorner(nf, nf) += sample_covariance(pairs.fine);
        if (pairs.coarse.rows() > 0) {
            const Eigen::Index nc = pairs.coarse.rows();
            C.topLeftCorner(nc, nc) -= sample_covariance(pairs.coarse);
        }
    }
    return C * obs.H_modes(static_cast<std::size_t>(n)).transpose();
}

Eigen::MatrixXd kalman_step(DenseGaussian& state, const Eigen::VectorXd& y,
                            const ObservationModel& obs, const ModelConfig& cfg) {
    const Eigen::Index n = state.mean.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double lambda = std::pow(std::acos(-1.0) * static_cast<double>(j + 1), 2);
        A(j, j) = std::exp((1.0 - lambda) * cfg.horizon);
        Q(j, j) = std::pow(lambda, -2.0 * cfg.b) * (1.0 - std::exp(2.0 * (1.0 - lambda) * cfg.horizon)) /
                  (2.0 * (lambda - 1.0));
    }
    state.mean = A * state.mean;
    state.cov = A * state.cov * A.transpose() + Q;

    const Eigen::MatrixXd& H = obs.H();
    const Eigen::MatrixXd S = H * state.cov * H.transpose() + obs.Gamma();
    const Eigen::MatrixXd K = state.cov * H.transpose() * S.inverse();
    state.mean += K * (y - H * state.mean);
    state.cov = (Eigen::MatrixXd::Identity(n, n) - K * H) * state.cov;
    return K;
}

}  // namespace mlenkf::oracle
