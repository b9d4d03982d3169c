#include "mlenkf/presets.hpp"

#include <cmath>
#include <numbers>

#include "mlenkf/errors.hpp"

namespace mlenkf {

namespace {

ObservationModel example1_obs(std::size_t n_ref) {
    const auto n = static_cast<Eigen::Index>(n_ref);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, n);
    Eigen::VectorXd qoi(n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        qoi[k - 1] = std::pow(static_cast<double>(k), -(0.5 + kUpsilon));
        if (k % 2 == 1) {
            const double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
            H(0, k - 1) = sign * std::pow(static_cast<double>(k), -(0.5 + kUpsilon));
        }
    }
    return ObservationModel(std::move(H), Eigen::MatrixXd::Constant(1, 1, 0.25), std::move(qoi));
}

ObservationModel example2_obs(std::size_t n_ref) {
    const auto n = static_cast<Eigen::Index>(n_ref);
    // sqrt(2) sin(j pi / 2) cycles through 1, 0, -1, 0.
    static constexpr double kCycle[4] = {0.0, 1.0, 0.0, -1.0};
    Eigen::MatrixXd H(1, n);
    for (Eigen::Index j = 1; j <= n; ++j) H(0, j - 1) = std::numbers::sqrt2 * kCycle[j % 4];
    return ObservationModel(std::move(H), Eigen::MatrixXd::Constant(1, 1, 0.25),
                            Eigen::VectorXd::Ones(n));
}

}  // namespace

ProblemSetup make_example(int example, std::size_t n_ref, double horizon) {
    require(n_ref >= 1, "make_example: n_ref must be positive");
    const auto n = static_cast<Eigen::Index>(n_ref);
    Eigen::VectorXd u0(n);
    if (example == 1) {
        for (Eigen::Index j = 1; j <= n; ++j) u0[j - 1] = std::pow(static_cast<double>(j), -(1.5 + kUpsilon));
        ModelConfig model{horizon, 0.25 + kUpsilon, 0.0, 0.5, Forcing::linear};
        return ProblemSetup{1, model, example1_obs(n_ref), std::move(u0)};
    }
    if (example == 2) {
        for (Eigen::Index j = 1; j <= n; ++j) u0[j - 1] = std::pow(static_cast<double>(j), -2.0 + kUpsilon);
        ModelConfig model{horizon, 0.5 + kUpsilon, 0.25 + kUpsilon / 2, 0.75 + kUpsilon / 2,
                          Forcing::linear};
        return ProblemSetup{2, model, example2_obs(n_ref), std::move(u0)};
    }
    throw ContractViolation("make_example: unknown example " + std::to_string(example));
}

}  // namespace mlenkf
