#pragma once
// Linear observations y = H u + eta, eta ~ N(0, Gamma), and the linear
// quantity of interest phi(u) = <qoi, u>, all stored as truncated mode
// coefficient rows of length n_ref.

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <cstddef>

namespace mlenkf {

class ObservationModel {
public:
    ObservationModel(Eigen::MatrixXd H, Eigen::MatrixXd Gamma, Eigen::VectorXd qoi);

    std::size_t n_ref() const { return static_cast<std::size_t>(H_.cols()); }
    std::size_t obs_dim() const { return static_cast<std::size_t>(H_.rows()); }

    const Eigen::MatrixXd& H() const { return H_; }
    const Eigen::MatrixXd& Gamma() const { return Gamma_; }
    const Eigen::VectorXd& qoi() const { return qoi_; }
    /// Lower Cholesky factor of Gamma; noise is drawn as chol * z.
    const Eigen::MatrixXd& gamma_chol() const { return gamma_chol_; }

    /// H restricted to the first N modes (m x N).
    auto H_modes(std::size_t n) const { return H_.leftCols(static_cast<Eigen::Index>(n)); }

    /// H u for a vector (or the columns of a matrix) of N <= n_ref modes.
    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const;
    Eigen::MatrixXd apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& members) const;

    /// phi(u) over the stored modes.
    double qoi_value(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const;

private:
    Eigen::MatrixXd H_;
    Eigen::MatrixXd Gamma_;
    Eigen::VectorXd qoi_;
    Eigen::MatrixXd gamma_chol_;
};

}  // namespace mlenkf
