#pragma once
// Forward solution operators for the stochastic heat equation
//   du = (Laplace u + f(u)) dt + B dW  on (0,1), zero Dirichlet data,
// with B = sum_j lambda_j^{-b} phi_j (x) phi_j and linear forcing f(u) = u.
//
// Two level-l solvers are provided: exact-in-time propagation of the first
// N_l modes, and exponential Euler with J_l substeps. Coarse/fine pairs share
// their driving noise so that level differences are small.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mlenkf/rng.hpp"
#include "mlenkf/spectral.hpp"

namespace mlenkf {

enum class Forcing { linear };  // f(u) = u; the only forcing shipped
enum class Solver { exact, expeuler };

struct ModelConfig {
    double horizon = 0.25;  // T
    double b = 0.251;       // smoothing exponent of B
    double r1 = 0.0;        // script-V = K_{r1}
    double r2 = 0.5;        // V = K_{r2}
    Forcing forcing = Forcing::linear;

    /// Requires T > 0, b >= 0 and r1 < r2 < b + 1/4.
    void validate() const;
};

/// e^{(1 - lambda) T}
double exact_propagator(double lambda, double horizon);
/// lambda^{-2b} (1 - e^{2(1-lambda)T}) / (2(lambda - 1)); lambda must exceed 1.
double exact_noise_variance(double lambda, double horizon, double b);
/// (1 - e^{-2 lambda dt}) / (2 lambda^{1+2b})
double substep_noise_variance(double lambda, double dt, double b);
/// g(lambda, dt) = e^{-lambda dt} + (1 - e^{-lambda dt}) / lambda
double euler_factor(double lambda, double dt);

/// Work tally filled in by the propagators and the ensemble update.
/// forward: mode updates executed by solvers (N per exact step, N*J per
/// exponential Euler solve, coarse members included).
/// update: m * N_l per updated particle pair.
struct WorkCounter {
    std::uint64_t forward = 0;
    std::uint64_t update = 0;

    std::uint64_t total() const { return forward + update; }
    WorkCounter& operator+=(const WorkCounter& other) {
        forward += other.forward;
        update += other.update;
        return *this;
    }
};

/// Gaussian increments R_{l,k}^{(j)} for one exponential Euler solve,
/// stored row-major by (substep k, mode j).
struct NoiseBlock {
    int level = 0;
    std::size_t step_count = 0;  // J_l
    std::size_t modes = 0;       // N_l
    std::vector<double> draws;

    double operator()(std::size_t k, std::size_t j) const { return draws[k * modes + j]; }
    std::span<const double> row(std::size_t k) const {
        return {draws.data() + k * modes, modes};
    }
};

/// One exact-in-time step of every stored mode; mode j uses draw j of the
/// keyed stream, so truncations sharing a key share their leading draws.
SpectralField exact_mode_step(const SpectralField& u, const ModelConfig& cfg, const RngKey& key);
/// Same step with caller-supplied standard normals (one per mode).
SpectralField exact_mode_step(const SpectralField& u, const ModelConfig& cfg,
                              std::span<const double> standard_normals);

NoiseBlock draw_noise_block(int level, const ModelConfig& cfg, const LevelHierarchy& hierarchy,
                            const RngKey& key);

/// Exponential Euler solve over [0, T] on level `level` driven by `noise`.
SpectralField expeuler_fine_solve(const SpectralField& u0, int level, const ModelConfig& cfg,
                                  const LevelHierarchy& hierarchy, const NoiseBlock& noise);

/// Level l-1 exponential Euler solve conditioned on the level-l increments:
/// each coarse increment is e^{-lambda dt_l} R_{2k} + R_{2k+1}.
SpectralField coupled_coarse_solve(const SpectralField& u0, int level, const ModelConfig& cfg,
                                   const LevelHierarchy& hierarchy, const NoiseBlock& fine_noise);

/// (Psi^{l-1}(coarse), Psi^l(fine)) with shared driving noise. For l = 0 the
/// coarse input and output are the zero field.
std::pair<SpectralField, SpectralField> forward_pair(const SpectralField& coarse,
                                                     const SpectralField& fine, int level,
                                                     const ModelConfig& cfg,
                                                     const LevelHierarchy& hierarchy,
                                                     const RngKey& key, Solver solver);

/// Precomputed per-mode factors for one level; advances raw coefficient
/// spans in place. Thread-safe (scratch storage is thread-local).
class PairPropagator {
public:
    PairPropagator(const ModelConfig& cfg, const LevelHierarchy& hierarchy, int level,
                   Solver solver);

    int level() const { return level_; }
    std::size_t fine_modes() const { return fine_modes_; }
    std::size_t coarse_modes() const { return coarse_modes_; }

    /// coarse is N_{l-1} long, or empty to advance the fine member alone
    /// (always empty on level 0).
    void advance(std::span<double> coarse, std::span<double> fine, const RngKey& key,
                 WorkCounter* work = nullptr) const;

private:
    Solver solver_;
    int level_;
    std::size_t fine_modes_;
    std::size_t coarse_modes_;
    std::size_t fine_steps_;
    std::vector<double> fine_factor_;    // e^{(1-lambda)T} or g(lambda, dt_l)
    std::vector<double> coarse_factor_;  // g(lambda, dt_{l-1}) (exponential Euler)
    std::vector<double> coarse_weight_;  // e^{-lambda dt_l}
    std::vector<double> noise_sd_;       // per-mode standard deviation of one draw
};

}  // namespace mlenkf
