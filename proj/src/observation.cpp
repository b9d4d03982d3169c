#include "mlenkf/observation.hpp"

#include <Eigen/Eigenvalues>
#include <span>

#include "mlenkf/errors.hpp"
#include "mlenkf/kernels.hpp"

namespace mlenkf {

ObservationModel::ObservationModel(Eigen::MatrixXd H, Eigen::MatrixXd Gamma, Eigen::VectorXd qoi)
    : H_(std::move(H)), Gamma_(std::move(Gamma)), qoi_(std::move(qoi)) {
    require(H_.rows() >= 1 && H_.cols() >= 1, "ObservationModel: H must be nonempty");
    require(Gamma_.rows() == H_.rows() && Gamma_.cols() == H_.rows(),
            "ObservationModel: Gamma must be m x m");
    require(qoi_.size() == H_.cols(), "ObservationModel: qoi length must equal n_ref");
    require(H_.allFinite() && Gamma_.allFinite() && qoi_.allFinite(),
            "ObservationModel: non-finite entries");
    require((Gamma_ - Gamma_.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * Gamma_.cwiseAbs().maxCoeff(),
            "ObservationModel: Gamma must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(Gamma_);
    require(llt.info() == Eigen::Success, "ObservationModel: Gamma must be positive definite");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Gamma_, Eigen::EigenvaluesOnly);
    require(eig.eigenvalues().minCoeff() > 0.0, "ObservationModel: Gamma must be positive definite");
    gamma_chol_ = llt.matrixL();
}

Eigen::VectorXd ObservationModel::apply(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const {
    require(static_cast<std::size_t>(coeffs.size()) <= n_ref(), "ObservationModel: too many modes");
    return H_modes(static_cast<std::size_t>(coeffs.size())) * coeffs;
}

Eigen::MatrixXd ObservationModel::apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& members) const {
    require(static_cast<std::size_t>(members.rows()) <= n_ref(), "ObservationModel: too many modes");
    return H_modes(static_cast<std::size_t>(members.rows())) * members;
}

double ObservationModel::qoi_value(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const {
    const auto n = static_cast<std::size_t>(coeffs.size());
    require(n <= n_ref(), "ObservationModel: too many modes");
    return kernels::dot(std::span<const double>(qoi_.data(), n), std::span<const double>(coeffs.data(), n));
}

}  // namespace mlenkf
