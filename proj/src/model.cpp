#include "mlenkf/model.hpp"

#include <cmath>
#include <string>

#include "mlenkf/errors.hpp"
#include "mlenkf/kernels.hpp"

namespace mlenkf {

void ModelConfig::validate() const {
    require(horizon > 0.0, "ModelConfig: T must be positive");
    require(b >= 0.0, "ModelConfig: b must be nonnegative");
    require(r1 < r2 && r2 < b + 0.25, "ModelConfig: need r1 < r2 < b + 1/4");
}

double exact_propagator(double lambda, double horizon) { return std::exp((1.0 - lambda) * horizon); }

double exact_noise_variance(double lambda, double horizon, double b) {
    ensure(lambda > 1.0, "exact_noise_variance: eigenvalue must exceed 1");
    return std::pow(lambda, -2.0 * b) * -std::expm1(2.0 * (1.0 - lambda) * horizon) /
           (2.0 * (lambda - 1.0));
}

double substep_noise_variance(double lambda, double dt, double b) {
    return -std::expm1(-2.0 * lambda * dt) / (2.0 * std::pow(lambda, 1.0 + 2.0 * b));
}

double euler_factor(double lambda, double dt) {
    return std::exp(-lambda * dt) - std::expm1(-lambda * dt) / lambda;
}

namespace {

std::vector<double>& scratch_normals() {
    thread_local std::vector<double> buffer;
    return buffer;
}

std::vector<double>& scratch_noise() {
    thread_local std::vector<double> buffer;
    return buffer;
}

}  // namespace

PairPropagator::PairPropagator(const ModelConfig& cfg, const LevelHierarchy& hierarchy, int level,
                               Solver solver)
    : solver_(solver), level_(level) {
    cfg.validate();
    require(level >= 0, "PairPropagator: negative level");
    const LevelParams fine = level_params(hierarchy, level);
    fine_modes_ = fine.modes;
    fine_steps_ = solver == Solver::exact ? 1 : fine.substeps;
    coarse_modes_ = level > 0 ? hierarchy.modes(level - 1) : 0;
    require(coarse_modes_ <= fine_modes_, "PairPropagator: N_l must be nondecreasing");

    fine_factor_.resize(fine_modes_);
    noise_sd_.resize(fine_modes_);
    if (solver == Solver::exact) {
        require(std::abs(hierarchy.horizon - cfg.horizon) < 1e-14 * cfg.horizon,
                "PairPropagator: hierarchy and model disagree on T");
        for (std::size_t j = 0; j < fine_modes_; ++j) {
            const double lambda = mode_eigenvalue(j + 1);
            fine_factor_[j] = exact_propagator(lambda, cfg.horizon);
            noise_sd_[j] = std::sqrt(exact_noise_variance(lambda, cfg.horizon, cfg.b));
        }
        return;
    }

    for (std::size_t j = 0; j < fine_modes_; ++j) {
        const double lambda = mode_eigenvalue(j + 1);
        fine_factor_[j] = euler_factor(lambda, fine.time_step);
        noise_sd_[j] = std::sqrt(substep_noise_variance(lambda, fine.time_step, cfg.b));
    }
    if (level > 0) {
        const LevelParams coarse = level_params(hierarchy, level - 1);
        require(fine.substeps == 2 * coarse.substeps,
                "PairPropagator: exponential Euler coupling needs J_l = 2 J_{l-1}");
        coarse_factor_.resize(coarse_modes_);
        coarse_weight_.resize(coarse_modes_);
        for (std::size_t j = 0; j < coarse_modes_; ++j) {
            const double lambda = mode_eigenvalue(j + 1);
            coarse_factor_[j] = euler_factor(lambda, coarse.time_step);
            coarse_weight_[j] = std::exp(-lambda * fine.time_step);
        }
    }
}

void PairPropagator::advance(std::span<double> coarse, std::span<double> fine, const RngKey& key,
                             WorkCounter* work) const {
    require(fine.size() == fine_modes_, "PairPropagator: fine member has " +
                                            std::to_string(fine.size()) + " modes, expected " +
                                            std::to_string(fine_modes_));
    require(coarse.empty() || coarse.size() == coarse_modes_,
            "PairPropagator: coarse member has wrong size");

    const NormalStream stream(key);
    auto& normals = scratch_normals();
    auto& noise = scratch_noise();
    const std::size_t total = fine_steps_ * fine_modes_;
    normals.resize(total);
    noise.resize(total);
    stream.fill(0, normals);
    for (std::size_t k = 0; k < fine_steps_; ++k) {
        const std::size_t offset = k * fine_modes_;
        kernels::multiply(noise_sd_, std::span<const double>(normals).subspan(offset, fine_modes_),
                          std::span<double>(noise).subspan(offset, fine_modes_));
    }
    const std::span<const double> rows(noise);

    if (solver_ == Solver::exact) {
        kernels::propagate(fine_factor_, rows, fine);
        if (!coarse.empty()) kernels::propagate(fine_factor_, rows, coarse);
        if (work) work->forward += fine_modes_ + coarse.size();
        return;
    }

    for (std::size_t k = 0; k < fine_steps_; ++k) {
        kernels::propagate(fine_factor_, rows.subspan(k * fine_modes_, fine_modes_), fine);
    }
    if (!coarse.empty()) {
        for (std::size_t k = 0; k < fine_steps_ / 2; ++k) {
            kernels::propagate_coupled(coarse_factor_, coarse_weight_,
                                       rows.subspan(2 * k * fine_modes_, coarse_modes_),
                                       rows.subspan((2 * k + 1) * fine_modes_, coarse_modes_),
                                       coarse);
        }
    }
    if (work) work->forward += fine_steps_ * fine_modes_ + (fine_steps_ / 2) * coarse.size();
}

SpectralField exact_mode_step(const SpectralField& u, const ModelConfig& cfg,
                              std::span<const double> standard_normals) {
    cfg.validate();
    require(u.level >= 0, "exact_mode_step: input must be a level >= 0 field");
    require(cfg.forcing == Forcing::linear, "exact_mode_step: requires linear forcing");
    require(standard_normals.size() >= u.size(), "exact_mode_step: too few noise draws");
    SpectralField out = u;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double lambda = mode_eigenvalue(j + 1);
        const double sd = std::sqrt(exact_noise_variance(lambda, cfg.horizon, cfg.b));
        out.coeffs[static_cast<Eigen::Index>(j)] =
            exact_propagator(lambda, cfg.horizon) * u.coeffs[static_cast<Eigen::Index>(j)] +
            sd * standard_normals[j];
    }
    return out;
}

SpectralField exact_mode_step(const SpectralField& u, const ModelConfig& cfg, const RngKey& key) {
    std::vector<double> normals(u.size());
    NormalStream(key).fill(0, normals);
    return exact_mode_step(u, cfg, normals);
}

NoiseBlock draw_noise_block(int level, const ModelConfig& cfg, const LevelHierarchy& hierarchy,
                            const RngKey& key) {
    cfg.validate();
    const LevelParams p = level_params(hierarchy, level);
    NoiseBlock block;
    block.level = level;
    block.step_count = p.substeps;
    block.modes = p.modes;
    block.draws.resize(p.substeps * p.modes);
    NormalStream(key).fill(0, block.draws);
    for (std::size_t j = 0; j < p.modes; ++j) {
        const double sd = std::sqrt(substep_noise_variance(mode_eigenvalue(j + 1), p.time_step, cfg.b));
        for (std::size_t k = 0; k < p.substeps; ++k) block.draws[k * p.modes + j] *= sd;
    }
    return block;
}

SpectralField expeuler_fine_solve(const SpectralField& u0, int level, const ModelConfig& cfg,
                                  const LevelHierarchy& hierarchy, const NoiseBlock& noise) {
    cfg.validate();
    const LevelParams p = level_params(hierarchy, level);
    require(noise.level == level && noise.modes == p.modes && noise.step_count == p.substeps,
            "expeuler_fine_solve: noise block does not match level " + std::to_string(level));
    require(u0.size() == p.modes, "expeuler_fine_solve: initial data not projected to level");
    std::vector<double> factor(p.modes);
    for (std::size_t j = 0; j < p.modes; ++j) factor[j] = euler_factor(mode_eigenvalue(j + 1), p.time_step);

    SpectralField out{u0.coeffs, level};
    std::span<double> state(out.coeffs.data(), p.modes);
    for (std::size_t k = 0; k < p.substeps; ++k) kernels::propagate(factor, noise.row(k), state);
    return out;
}

SpectralField coupled_coarse_solve(const SpectralField& u0, int level, const ModelConfig& cfg,
                                   const LevelHierarchy& hierarchy, const NoiseBlock& fine_noise) {
    cfg.validate();
    require(level >= 1, "coupled_coarse_solve: level 0 has no coarser level");
    const LevelParams fine = level_params(hierarchy, level);
    const LevelParams coarse = level_params(hierarchy, level - 1);
    require(fine_noise.level == level && fine_noise.modes == fine.modes &&
                fine_noise.step_count == fine.substeps,
            "coupled_coarse_solve: noise block does not match level " + std::to_string(level));
    require(fine.substeps == 2 * coarse.substeps, "coupled_coarse_solve: need J_l = 2 J_{l-1}");
    require(u0.size() == coarse.modes, "coupled_coarse_solve: initial data not at level l-1");

    std::vector<double> factor(coarse.modes);
    std::vector<double> weight(coarse.modes);
    for (std::size_t j = 0; j < coarse.modes; ++j) {
        const double lambda = mode_eigenvalue(j + 1);
        factor[j] = euler_factor(lambda, coarse.time_step);
        weight[j] = std::exp(-lambda * fine.time_step);
    }
    SpectralField out{u0.coeffs, level - 1};
    std::span<double> state(out.coeffs.data(), coarse.modes);
    for (std::size_t k = 0; k < coarse.substeps; ++k) {
        kernels::propagate_coupled(factor, weight, fine_noise.row(2 * k).first(coarse.modes),
                                   fine_noise.row(2 * k + 1).first(coarse.modes), state);
    }
    return out;
}

std::pair<SpectralField, SpectralField> forward_pair(const SpectralField& coarse,
                                                     const SpectralField& fine, int level,
                                                     const ModelConfig& cfg,
                                                     const LevelHierarchy& hierarchy,
                                                     const RngKey& key, Solver solver) {
    require(fine.level == level, "forward_pair: fine member must be tagged with the pair level");
    if (level == 0) {
        require(coarse.level == -1 && coarse.size() == 0,
                "forward_pair: level-0 coarse member must be the zero field");
    } else {
        require(coarse.level == level - 1, "forward_pair: coarse member must be at level l-1");
    }
    const PairPropagator propagator(cfg, hierarchy, level, solver);
    SpectralField c = coarse;
    SpectralField f = fine;
    propagator.advance(std::span<double>(c.coeffs.data(), c.size()),
                       std::span<double>(f.coeffs.data(), f.size()), key);
    return {std::move(c), std::move(f)};
}

}  // namespace mlenkf
