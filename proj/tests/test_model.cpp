#include <doctest.h>

#include <cmath>
#include <vector>

#include "mlenkf/errors.hpp"
#include "mlenkf/kernels.hpp"
#include "mlenkf/model.hpp"
#include "mlenkf/presets.hpp"

using namespace mlenkf;

namespace {

const double kLambda1 = 9.86960440108935861883;

ModelConfig example1() { return ModelConfig{0.25, 0.251, 0.0, 0.5, Forcing::linear}; }

LevelHierarchy ladder(std::size_t n0, bool stepping) {
    return LevelHierarchy::equilibrated(0.0, 0.5, n0, 1, 0.25, stepping);
}

NoiseBlock zero_block(const LevelHierarchy& h, int level) {
    NoiseBlock b;
    b.level = level;
    b.step_count = h.substeps(level);
    b.modes = h.modes(level);
    b.draws.assign(b.step_count * b.modes, 0.0);
    return b;
}

}  // namespace

// Expected values below were evaluated in 30-digit arithmetic and frozen.
TEST_CASE("closed-form factors and variances") {
    CHECK(exact_propagator(kLambda1, 0.25) == doctest::Approx(0.108891740114414313508).epsilon(1e-14));
    CHECK(exact_noise_variance(kLambda1, 0.25, 0.251) ==
          doctest::Approx(0.0176500890111451651).epsilon(1e-14));
    CHECK(substep_noise_variance(kLambda1, 0.25, 0.251) ==
          doctest::Approx(0.0159366526064429218).epsilon(1e-14));
    CHECK(euler_factor(kLambda1, 0.25) == doctest::Approx(0.177533615923922430478).epsilon(1e-14));
    // Var(e^{-lambda dt} R + R') over two half steps equals one full step.
    const double fine = substep_noise_variance(kLambda1, 0.125, 0.251);
    CHECK((1.0 + std::exp(-2.0 * kLambda1 * 0.125)) * fine ==
          doctest::Approx(0.0159366526064429218).epsilon(1e-14));
}

TEST_CASE("variances stay accurate for tiny lambda dt") {
    const double lambda = 10.0, dt = 1e-12;
    CHECK(substep_noise_variance(lambda, dt, 0.0) == doctest::Approx(dt).epsilon(1e-10));
    CHECK(euler_factor(lambda, dt) == doctest::Approx(1.0 + dt * (1.0 - lambda)).epsilon(1e-15));
}

TEST_CASE("g(lambda, dt) < 1") {
    for (std::size_t j = 1; j <= 1024; j *= 2)
        for (double dt : {1e-6, 1e-3, 0.25, 2.0}) CHECK(euler_factor(mode_eigenvalue(j), dt) < 1.0);
}

TEST_CASE("model configuration bounds") {
    CHECK_NOTHROW(example1().validate());
    ModelConfig bad = example1();
    bad.r2 = 0.51;  // b + 1/4 = 0.501
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
    bad = example1();
    bad.r1 = 0.5;
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
    bad = example1();
    bad.horizon = 0.0;
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("exact mode step") {
    const ModelConfig cfg = example1();
    const SpectralField phi1{Eigen::VectorXd::Ones(3), 0};
    const std::vector<double> zeros(3, 0.0);
    const SpectralField out = exact_mode_step(phi1, cfg, zeros);
    CHECK(out.coeffs[0] == doctest::Approx(0.108891740114414313508).epsilon(1e-14));
    CHECK(exact_mode_step(SpectralField{Eigen::VectorXd::Zero(3), 0}, cfg, zeros).coeffs.isZero(0.0));

    const RngKey key{5, Purpose::truth, 0, 0, 0, 1};
    const SpectralField short_run = exact_mode_step(SpectralField{Eigen::VectorXd::Zero(2), 0}, cfg, key);
    const SpectralField long_run = exact_mode_step(SpectralField{Eigen::VectorXd::Zero(5), 0}, cfg, key);
    CHECK(long_run.coeffs.head(2) == short_run.coeffs);
    CHECK_THROWS_AS(exact_mode_step(SpectralField::zero(), cfg, key), ContractViolation);
}

TEST_CASE("exact mode step noise variance") {
    const ModelConfig cfg = example1();
    const SpectralField zero{Eigen::VectorXd::Zero(2), 0};
    const int n = 100000;
    double ss0 = 0.0, ss1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto u = exact_mode_step(zero, cfg, {9, Purpose::truth, 0, 0, 0, static_cast<std::uint32_t>(i)});
        ss0 += u.coeffs[0] * u.coeffs[0];
        ss1 += u.coeffs[1] * u.coeffs[1];
    }
    const double v0 = exact_noise_variance(kLambda1, 0.25, 0.251);
    const double v1 = exact_noise_variance(4 * kLambda1, 0.25, 0.251);
    CHECK(std::abs(ss0 / n - v0) < 3.0 * v0 * std::sqrt(2.0 / n));
    CHECK(std::abs(ss1 / n - v1) < 3.0 * v1 * std::sqrt(2.0 / n));
}

TEST_CASE("noise blocks") {
    const ModelConfig cfg = example1();
    const LevelHierarchy h = ladder(1, true);
    const RngKey key{1, Purpose::forward, 0, 2, 3, 4};
    const NoiseBlock a = draw_noise_block(2, cfg, h, key);
    const NoiseBlock b = draw_noise_block(2, cfg, h, key);
    CHECK(a.step_count == 4);
    CHECK(a.modes == 4);
    CHECK(a.draws == b.draws);
    CHECK_THROWS_AS(draw_noise_block(-1, cfg, h, key), ContractViolation);

    // Level 0 has J = 1 and dt = 0.25: 1e5 blocks give 1e5 samples of mode 1.
    const int n = 100000;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const NoiseBlock blk = draw_noise_block(0, cfg, h, {1, Purpose::forward, 0, 0, static_cast<std::uint32_t>(i), 0});
        ss += blk(0, 0) * blk(0, 0);
    }
    const double v = 0.0159366526064429218;
    CHECK(std::abs(ss / n - v) < 3.0 * v * std::sqrt(2.0 / n));
}

TEST_CASE("exponential Euler solves by hand") {
    const ModelConfig cfg = example1();
    const LevelHierarchy h = ladder(1, true);
    // Level 0: J = 1, dt = T.
    const SpectralField phi1{Eigen::VectorXd::Ones(1), 0};
    const auto fine = expeuler_fine_solve(phi1, 0, cfg, h, zero_block(h, 0));
    CHECK(fine.coeffs[0] == doctest::Approx(0.177533615923922430478).epsilon(1e-14));
    CHECK(expeuler_fine_solve({Eigen::VectorXd::Zero(1), 0}, 0, cfg, h, zero_block(h, 0)).coeffs.isZero(0.0));

    // Coarse solve on level 1 runs J_0 = 1 step of size T.
    const auto coarse = coupled_coarse_solve(phi1, 1, cfg, h, zero_block(h, 1));
    CHECK(coarse.level == 0);
    CHECK(coarse.coeffs[0] == doctest::Approx(0.177533615923922430478).epsilon(1e-14));

    // Two fine steps of T/2 with zero noise: g(lambda, T/2)^2.
    const SpectralField phi1_l1{Eigen::Vector2d(1.0, 0.0), 1};
    const auto two = expeuler_fine_solve(phi1_l1, 1, cfg, h, zero_block(h, 1));
    CHECK(two.coeffs[0] == doctest::Approx(0.363028077771156984631 * 0.363028077771156984631).epsilon(1e-14));

    CHECK_THROWS_AS(coupled_coarse_solve(phi1, 0, cfg, h, zero_block(h, 0)), ContractViolation);
    CHECK_THROWS_AS(expeuler_fine_solve(phi1, 1, cfg, h, zero_block(h, 1)), ContractViolation);
    CHECK_THROWS_AS(expeuler_fine_solve(phi1_l1, 1, cfg, h, zero_block(h, 0)), ContractViolation);
}

TEST_CASE("coupled coarse solve uses e^{-lambda dt} R_{2k} + R_{2k+1} and only modes j <= N_{l-1}") {
    const ModelConfig cfg = example1();
    const LevelHierarchy h = ladder(1, true);
    NoiseBlock noise = zero_block(h, 2);  // 4 substeps x 4 modes
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t j = 0; j < 4; ++j) noise.draws[k * 4 + j] = 0.1 * double(k + 1) + (j >= 2 ? 1e6 : 0.0);
    const auto out = coupled_coarse_solve({Eigen::VectorXd::Zero(2), 1}, 2, cfg, h, noise);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double lambda = mode_eigenvalue(std::size_t(j) + 1);
        const double g = euler_factor(lambda, 0.125), w = std::exp(-lambda * 0.0625);
        double u = 0.0;
        for (int k = 0; k < 2; ++k) u = g * u + w * 0.1 * (2 * k + 1) + 0.1 * (2 * k + 2);
        CHECK(out.coeffs[j] == doctest::Approx(u).epsilon(1e-14));
    }
}

TEST_CASE("forward_pair agrees with the separate solvers") {
    const auto p = make_example(1, 16);
    const LevelHierarchy h = ladder(1, true);
    const RngKey key{3, Purpose::forward, 1, 3, 2, 1};
    const SpectralField fine{p.u0.head(8), 3}, coarse{p.u0.head(4), 2};
    const auto [c, f] = forward_pair(coarse, fine, 3, p.model, h, key, Solver::expeuler);
    const NoiseBlock block = draw_noise_block(3, p.model, h, key);
    CHECK(f.coeffs == expeuler_fine_solve(fine, 3, p.model, h, block).coeffs);
    CHECK(c.coeffs == coupled_coarse_solve(coarse, 3, p.model, h, block).coeffs);

    const auto [c0, f0] = forward_pair(SpectralField::zero(), SpectralField{p.u0.head(1), 0}, 0, p.model, h, key,
                                       Solver::expeuler);
    CHECK(c0.level == -1);
    CHECK(c0.size() == 0);
    CHECK(f0.size() == 1);
    CHECK_THROWS_AS(forward_pair(coarse, coarse, 3, p.model, h, key, Solver::expeuler), ContractViolation);
}

TEST_CASE("exact-in-time coupling: coarse output equals projected fine output") {
    const auto p = make_example(1, 64);
    const LevelHierarchy h = ladder(1, false);
    for (int l = 1; l <= 6; ++l) {
        const SpectralField fine = project({p.u0, 6}, l, h), coarse = project({p.u0, 6}, l - 1, h);
        const auto [c, f] = forward_pair(coarse, fine, l, p.model, h, {8, Purpose::forward, 0, 0, 0, 0}, Solver::exact);
        CHECK(project(f, l - 1, h).coeffs == c.coeffs);
    }
}

TEST_CASE("propagation is bit-identical under every kernel variant") {
    const auto p = make_example(1, 64);
    const LevelHierarchy h = ladder(1, true);
    const RngKey key{4, Purpose::forward, 2, 5, 1, 3};
    const SpectralField fine = project({p.u0, 6}, 5, h), coarse = project({p.u0, 6}, 4, h);
    const kernels::Isa before = kernels::active().isa;
    kernels::select(kernels::Isa::scalar);
    const auto ref = forward_pair(coarse, fine, 5, p.model, h, key, Solver::expeuler);
    for (auto isa : {kernels::Isa::avx2, kernels::Isa::neon}) {
        if (!kernels::available(isa)) continue;
        kernels::select(isa);
        const auto got = forward_pair(coarse, fine, 5, p.model, h, key, Solver::expeuler);
        CHECK(got.first.coeffs == ref.first.coeffs);
        CHECK(got.second.coeffs == ref.second.coeffs);
    }
    kernels::select(before);
}

TEST_CASE("work counter tallies executed mode updates") {
    const auto p = make_example(1, 64);
    const LevelHierarchy h = ladder(1, true);
    const PairPropagator prop(p.model, h, 3, Solver::expeuler);
    SpectralField fine = project({p.u0, 6}, 3, h), coarse = project({p.u0, 6}, 2, h);
    WorkCounter w;
    prop.advance({coarse.coeffs.data(), 4}, {fine.coeffs.data(), 8}, {1, Purpose::forward, 0, 3, 0, 0}, &w);
    CHECK(w.forward == 8 * 8 + 4 * 4);
    prop.advance({}, {fine.coeffs.data(), 8}, {1, Purpose::forward, 0, 3, 0, 1}, &w);
    CHECK(w.forward == 8 * 8 + 4 * 4 + 8 * 8);
}
