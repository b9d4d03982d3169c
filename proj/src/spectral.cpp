#include "mlenkf/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mlenkf/errors.hpp"

namespace mlenkf {

ModeBasis::ModeBasis(std::size_t n_ref) : n_ref_(n_ref) {
    require(n_ref >= 1, "ModeBasis: n_ref must be positive");
}

double ModeBasis::eigenvalue(std::size_t j) const {
    require(j >= 1 && j <= n_ref_, "eigenvalue: mode index " + std::to_string(j) +
                                       " outside [1, " + std::to_string(n_ref_) + "]");
    return mode_eigenvalue(j);
}

double mode_eigenvalue(std::size_t j) {
    const double jj = static_cast<double>(j);
    return std::numbers::pi * std::numbers::pi * jj * jj;
}

double fractional_norm(const Eigen::Ref<const Eigen::VectorXd>& coeffs, double r) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        const double weight = r == 0.0 ? 1.0 : std::pow(mode_eigenvalue(i + 1), 2.0 * r);
        sum += weight * coeffs[i] * coeffs[i];
    }
    return std::sqrt(sum);
}

double fractional_norm(const SpectralField& u, double r) { return fractional_norm(u.coeffs, r); }

LevelHierarchy LevelHierarchy::equilibrated(double r1, double r2, std::size_t n0, std::size_t j0,
                                            double horizon, bool time_stepping) {
    require(r2 > r1, "equilibrated hierarchy needs r2 > r1");
    LevelHierarchy h;
    h.kappa = std::pow(2.0, 1.0 / (2.0 * (r2 - r1)));
    h.n0 = n0;
    h.j0 = j0;
    h.dim = 1;
    h.beta = 4.0 * (r2 - r1);
    h.gamma_x = 1.0;
    h.gamma_t = time_stepping ? 2.0 * (r2 - r1) : 0.0;
    h.horizon = horizon;
    h.validate();
    return h;
}

void LevelHierarchy::validate() const {
    require(kappa > 1.0, "LevelHierarchy: kappa must exceed 1");
    require(n0 >= 1 && j0 >= 1, "LevelHierarchy: N0 and J0 must be positive");
    require(dim >= 1, "LevelHierarchy: dimension must be positive");
    require(horizon > 0.0, "LevelHierarchy: observation interval must be positive");
    require(beta > 0.0, "LevelHierarchy: beta must be positive");
}

std::size_t LevelHierarchy::modes(int level) const {
    require(level >= 0, "LevelHierarchy: negative level");
    // Round half up; exact for integer kappa.
    return static_cast<std::size_t>(std::floor(static_cast<double>(n0) * std::pow(kappa, level) + 0.5));
}

std::size_t LevelHierarchy::substeps(int level) const {
    require(level >= 0 && level < 63, "LevelHierarchy: level out of range");
    return j0 << level;
}

LevelParams level_params(const LevelHierarchy& hierarchy, int level) {
    require(level >= 0, "level_params: negative level " + std::to_string(level));
    LevelParams p{};
    p.modes = hierarchy.modes(level);
    p.substeps = hierarchy.substeps(level);
    p.mesh_width = std::pow(static_cast<double>(p.modes), -1.0 / hierarchy.dim);
    p.time_step = hierarchy.horizon / static_cast<double>(p.substeps);
    return p;
}

SpectralField project(const SpectralField& u, int level, const LevelHierarchy& hierarchy) {
    require(level >= -1, "project: level must be >= -1");
    if (level == -1) return SpectralField::zero();
    const auto n = static_cast<Eigen::Index>(hierarchy.modes(level));
    SpectralField out;
    out.level = level;
    out.coeffs = Eigen::VectorXd::Zero(n);
    const Eigen::Index kept = std::min<Eigen::Index>(n, u.coeffs.size());
    out.coeffs.head(kept) = u.coeffs.head(kept);
    return out;
}

}  // namespace mlenkf
