#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "mlenkf/errors.hpp"
#include "mlenkf/filters.hpp"
#include "mlenkf/kalman.hpp"
#include "mlenkf/oracles.hpp"
#include "mlenkf/presets.hpp"

using namespace mlenkf;

TEST_CASE("scalar Kalman update by hand") {
    GaussianState s = GaussianState::point_mass(Eigen::VectorXd::Zero(1));
    s.cov_diag[0] = 1.0;
    const ObservationModel obs(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1));
    const GainPack g = kalman_gain(s, obs);
    CHECK(g.S(0, 0) == 2.0);
    CHECK(g.K(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    kalman_update(s, Eigen::VectorXd::Ones(1), obs);
    CHECK(s.mean[0] == doctest::Approx(0.5));
    CHECK(s.dense_covariance()(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("zero innovation keeps the mean") {
    const auto p = make_example(1, 32);
    GaussianState s = GaussianState::point_mass(p.u0);
    kalman_predict(s, p.model);
    const Eigen::VectorXd before = s.mean;
    kalman_update(s, p.obs.apply(s.mean), p.obs);
    CHECK((s.mean - before).norm() == 0.0);
}

TEST_CASE("low-rank covariance follows the dense recursion") {
    for (int example : {1, 2}) {
        const auto p = make_example(example, 64);
        GaussianState s = GaussianState::point_mass(p.u0);
        oracle::DenseGaussian dense{p.u0, Eigen::MatrixXd::Zero(64, 64)};
        std::mt19937_64 rng(example);
        std::normal_distribution<double> normal;
        for (int n = 1; n <= 5; ++n) {
            const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, normal(rng));
            const GainPack g = kalman_step(s, y, p.obs, p.model);
            const Eigen::MatrixXd K = oracle::kalman_step(dense, y, p.obs, p.model);
            CHECK((g.K - K).cwiseAbs().maxCoeff() <= 1e-12);
        }
        CHECK(s.rank() == 5);
        CHECK((s.dense_covariance() - dense.cov).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((s.mean - dense.mean).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(s.psd_certificate() >= 0.0);
    }
}

TEST_CASE("PSD certificate agrees with the dense spectrum") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        GaussianState s = GaussianState::point_mass(Eigen::VectorXd::Zero(6));
        s.cov_diag = Eigen::VectorXd::Constant(6, 1.0);
        s.factors = Eigen::MatrixXd(6, 3);
        for (auto& x : s.factors.reshaped()) x = 0.6 * normal(rng);
        s.signs = Eigen::Vector3d(1.0, trial % 2 ? -1.0 : 1.0, 1.0);
        const double dense_min =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.dense_covariance()).eigenvalues().minCoeff();
        const double cert = s.psd_certificate();
        if (std::abs(dense_min) > 1e-9) CHECK((cert >= 0.0) == (dense_min >= 0.0));
    }
}

TEST_CASE("ml_gain on the exact covariance equals the Kalman gain") {
    const auto p = make_example(2, 64);
    GaussianState s = GaussianState::point_mass(p.u0);
    for (int n = 0; n < 3; ++n) {
        kalman_predict(s, p.model);
        const GainPack k = kalman_gain(s, p.obs);
        const GainPack g = ml_gain(s.cov_times(p.obs.H().transpose()), p.obs);
        CHECK((g.K - k.K).norm() <= 1e-12 * k.K.norm());
        kalman_update(s, Eigen::VectorXd::Constant(1, 0.2), p.obs);
    }
}

TEST_CASE("Kalman state rejects mismatched observation models") {
    const auto p = make_example(1, 16);
    GaussianState s = GaussianState::point_mass(Eigen::VectorXd::Zero(8));
    CHECK_THROWS_AS(kalman_gain(s, p.obs), ContractViolation);
}
