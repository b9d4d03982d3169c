#include "mlenkf/kalman.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "mlenkf/errors.hpp"
#include "mlenkf/spectral.hpp"

namespace mlenkf {

GaussianState GaussianState::point_mass(const Eigen::VectorXd& mean) {
    GaussianState s;
    s.mean = mean;
    s.cov_diag = Eigen::VectorXd::Zero(mean.size());
    s.factors = Eigen::MatrixXd(mean.size(), 0);
    s.signs = Eigen::VectorXd(0);
    return s;
}

Eigen::MatrixXd GaussianState::cov_times(const Eigen::MatrixXd& B) const {
    require(B.rows() == mean.size(), "GaussianState::cov_times: shape mismatch");
    Eigen::MatrixXd out = cov_diag.asDiagonal() * B;
    if (rank() > 0) out.noalias() -= factors * (signs.asDiagonal() * (factors.transpose() * B));
    return out;
}

Eigen::MatrixXd GaussianState::dense_covariance() const {
    Eigen::MatrixXd C = cov_diag.asDiagonal();
    if (rank() > 0) C.noalias() -= factors * signs.asDiagonal() * factors.transpose();
    return C;
}

double GaussianState::psd_certificate() const {
    if (rank() == 0) return cov_diag.size() == 0 ? 0.0 : cov_diag.minCoeff();
    require(cov_diag.minCoeff() > 0.0, "psd_certificate: needs a positive diagonal");

    // Split C = D + G G^T - F F^T (G: factors with sign -1, F: sign +1).
    // C is PSD iff I - F^T (D + G G^T)^{-1} F is PSD; the inverse is applied
    // through Woodbury with an r x r solve.
    std::vector<Eigen::Index> plus, minus;
    for (Eigen::Index k = 0; k < signs.size(); ++k) (signs[k] > 0 ? plus : minus).push_back(k);
    const Eigen::MatrixXd F = factors(Eigen::all, plus);
    const Eigen::MatrixXd G = factors(Eigen::all, minus);
    const Eigen::VectorXd d_inv = cov_diag.cwiseInverse();

    Eigen::MatrixXd D_inv_F = d_inv.asDiagonal() * F;
    if (G.cols() > 0) {
        const Eigen::MatrixXd D_inv_G = d_inv.asDiagonal() * G;
        Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(G.cols(), G.cols()) + G.transpose() * D_inv_G;
        D_inv_F -= D_inv_G * inner.llt().solve(G.transpose() * D_inv_F);
    }
    if (F.cols() == 0) return 1.0;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(F.cols(), F.cols()) - F.transpose() * D_inv_F;
    gram = 0.5 * (gram + gram.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

void kalman_predict(GaussianState& state, const ModelConfig& cfg) {
    cfg.validate();
    require(cfg.forcing == Forcing::linear, "kalman_predict: requires linear forcing");
    const Eigen::Index n = state.mean.size();
    Eigen::VectorXd a(n), q(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double lambda = mode_eigenvalue(static_cast<std::size_t>(j) + 1);
        a[j] = exact_propagator(lambda, cfg.horizon);
        q[j] = exact_noise_variance(lambda, cfg.horizon, cfg.b);
    }
    state.mean = a.cwiseProduct(state.mean);
    state.cov_diag = a.cwiseAbs2().cwiseProduct(state.cov_diag) + q;
    if (state.rank() > 0) state.factors = a.asDiagonal() * state.factors;
}

GainPack kalman_gain(const GaussianState& state, const ObservationModel& obs) {
    require(state.dim() == obs.n_ref(), "kalman_gain: state and observation model disagree on n_ref");
    GainPack g;
    g.R = state.cov_times(obs.H().transpose());
    g.S = obs.H() * g.R + obs.Gamma();
    g.S = 0.5 * (g.S + g.S.transpose());
    const Eigen::LLT<Eigen::MatrixXd> llt(g.S);
    ensure(llt.info() == Eigen::Success, "kalman_gain: S is not positive definite");
    g.K = llt.solve(g.R.transpose()).transpose();
    return g;
}

namespace {

void apply_update(GaussianState& state, const GainPack& g, const Eigen::VectorXd& y,
                  const ObservationModel& obs) {
    require(y.size() == static_cast<Eigen::Index>(obs.obs_dim()), "kalman_update: y must have m entries");
    state.mean += g.K * (y - obs.H() * state.mean);

    // C - P S^{-1} P^T = C - (P L^{-T})(P L^{-T})^T with S = L L^T.
    const Eigen::LLT<Eigen::MatrixXd> llt(g.S);
    ensure(llt.info() == Eigen::Success, "kalman_update: S is not positive definite");
    const Eigen::MatrixXd downdate = llt.matrixL().solve(g.R.transpose()).transpose();

    const Eigen::Index r = state.factors.cols();
    const Eigen::Index m = downdate.cols();
    state.factors.conservativeResize(Eigen::NoChange, r + m);
    state.factors.rightCols(m) = downdate;
    state.signs.conservativeResize(r + m);
    state.signs.tail(m).setOnes();
    ensure(state.mean.allFinite() && state.factors.allFinite(), "kalman_update: non-finite state");
}

}  // namespace

void kalman_update(GaussianState& state, const Eigen::VectorXd& y, const ObservationModel& obs) {
    apply_update(state, kalman_gain(state, obs), y, obs);
}

GainPack kalman_step(GaussianState& state, const Eigen::VectorXd& y, const ObservationModel& obs,
                     const ModelConfig& cfg) {
    kalman_predict(state, cfg);
    GainPack g = kalman_gain(state, obs);
    apply_update(state, g, y, obs);
    return g;
}

}  // namespace mlenkf
