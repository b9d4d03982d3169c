#pragma once
// Sine eigenbasis of the Dirichlet Laplacian on (0,1), fractional norms,
// mode-truncation projectors and the resolution-level ladder.

#include <Eigen/Core>
#include <cstddef>

namespace mlenkf {

/// Eigenvalues lambda_j = pi^2 j^2 of -Laplace, j = 1..n_ref.
class ModeBasis {
public:
    explicit ModeBasis(std::size_t n_ref);

    std::size_t n_ref() const { return n_ref_; }

    /// Throws ContractViolation unless 1 <= j <= n_ref.
    double eigenvalue(std::size_t j) const;

private:
    std::size_t n_ref_;
};

/// Unchecked lambda_j = pi^2 j^2 for internal loops.
double mode_eigenvalue(std::size_t j);

/// Mode coefficients <u, phi_j>, j = 1..coeffs.size(), tagged with the level
/// whose truncation dimension they live in. Level -1 is the zero field.
struct SpectralField {
    Eigen::VectorXd coeffs;
    int level = -1;

    static SpectralField zero() { return {}; }
    std::size_t size() const { return static_cast<std::size_t>(coeffs.size()); }
};

/// sqrt(sum_j lambda_j^{2r} |u_j|^2) over the stored modes.
double fractional_norm(const Eigen::Ref<const Eigen::VectorXd>& coeffs, double r);
double fractional_norm(const SpectralField& u, double r);

struct LevelParams {
    std::size_t modes;      // N_l
    std::size_t substeps;   // J_l
    double mesh_width;      // h_l = N_l^{-1/d}
    double time_step;       // dt_l = T / J_l
};

/// Resolution ladder N_l = round(N0 kappa^l), J_l = J0 2^l, together with the
/// rate constants (beta, gamma_x, gamma_t, d) used by the sample-size
/// schedules.
struct LevelHierarchy {
    double kappa = 2.0;
    std::size_t n0 = 1;
    std::size_t j0 = 1;
    int dim = 1;
    double beta = 2.0;
    double gamma_x = 1.0;
    double gamma_t = 0.0;
    double horizon = 0.25;  // T, time between observations

    /// kappa = 2^{1/(2(r2-r1))}, beta = 4(r2-r1), gamma_x = 1,
    /// gamma_t = 2(r2-r1) when time stepping, 0 when exact in time.
    static LevelHierarchy equilibrated(double r1, double r2, std::size_t n0, std::size_t j0,
                                       double horizon, bool time_stepping);

    void validate() const;
    std::size_t modes(int level) const;
    std::size_t substeps(int level) const;
    double cost_exponent() const { return dim * gamma_x + gamma_t; }
};

/// Throws ContractViolation for level < 0.
LevelParams level_params(const LevelHierarchy& hierarchy, int level);

/// Keep modes j <= N_l (zero-padding a shorter input); level -1 yields the
/// zero field.
SpectralField project(const SpectralField& u, int level, const LevelHierarchy& hierarchy);

}  // namespace mlenkf
