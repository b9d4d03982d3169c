#include <doctest.h>

#include <random>
#include <vector>

#include "mlenkf/kernels.hpp"

using namespace mlenkf;
using kernels::Isa;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> normal;
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    return v;
}

std::vector<Isa> simd_variants() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::avx2, Isa::neon})
        if (kernels::available(isa)) out.push_back(isa);
    return out;
}

}  // namespace

TEST_CASE("scalar table is always available and active() resolves") {
    CHECK(kernels::available(Isa::scalar));
    CHECK(kernels::table(Isa::scalar).isa == Isa::scalar);
    CHECK(kernels::available(kernels::active().isa));
    CHECK(kernels::isa_name(Isa::avx2) == "avx2");
}

TEST_CASE("unavailable variants are rejected") {
    for (Isa isa : {Isa::avx2, Isa::neon}) {
        if (!kernels::available(isa)) CHECK_THROWS_AS(kernels::table(isa), ContractViolation);
    }
}

TEST_CASE("elementwise kernels are bit-identical across variants") {
    std::mt19937_64 rng(11);
    const auto& ref = kernels::table(Isa::scalar);
    for (Isa isa : simd_variants()) {
        const auto& simd = kernels::table(isa);
        CAPTURE(kernels::isa_name(isa));
        for (std::size_t n = 0; n <= 37; ++n) {
            CAPTURE(n);
            const auto a = random_vector(rng, n), x = random_vector(rng, n), w = random_vector(rng, n),
                       re = random_vector(rng, n), ro = random_vector(rng, n), u0 = random_vector(rng, n);

            std::vector<double> o1(n), o2(n);
            ref.multiply(a.data(), x.data(), o1.data(), n);
            simd.multiply(a.data(), x.data(), o2.data(), n);
            CHECK(o1 == o2);

            auto u1 = u0, u2 = u0;
            ref.propagate(a.data(), x.data(), u1.data(), n);
            simd.propagate(a.data(), x.data(), u2.data(), n);
            CHECK(u1 == u2);

            u1 = u0;
            u2 = u0;
            ref.propagate_coupled(a.data(), w.data(), re.data(), ro.data(), u1.data(), n);
            simd.propagate_coupled(a.data(), w.data(), re.data(), ro.data(), u2.data(), n);
            CHECK(u1 == u2);

            u1 = u0;
            u2 = u0;
            ref.axpy(0.37, x.data(), u1.data(), n);
            simd.axpy(0.37, x.data(), u2.data(), n);
            CHECK(u1 == u2);
        }
    }
}

TEST_CASE("dot agrees across variants up to summation order") {
    std::mt19937_64 rng(12);
    const auto& ref = kernels::table(Isa::scalar);
    for (Isa isa : simd_variants()) {
        for (std::size_t n : {0, 1, 3, 4, 7, 8, 9, 64, 1023}) {
            const auto x = random_vector(rng, n), y = random_vector(rng, n);
            double abs_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(x[i] * y[i]);
            CHECK(std::abs(ref.dot(x.data(), y.data(), n) - kernels::table(isa).dot(x.data(), y.data(), n)) <=
                  1e-15 * abs_sum * static_cast<double>(n + 1));
        }
    }
}

TEST_CASE("scalar reference kernels compute the documented formulas") {
    const std::vector<double> f{2.0, -1.0, 0.5}, r{1.0, 2.0, 3.0}, w{0.5, 0.25, 2.0}, r2{-1.0, 0.0, 1.0};
    std::vector<double> u{1.0, 1.0, 1.0};
    kernels::table(Isa::scalar).propagate_coupled(f.data(), w.data(), r.data(), r2.data(), u.data(), 3);
    CHECK(u == std::vector<double>{2.0 + 0.5 - 1.0, -1.0 + 0.5, 0.5 + 6.0 + 1.0});
    CHECK(kernels::table(Isa::scalar).dot(f.data(), r.data(), 3) == doctest::Approx(1.5));
}

TEST_CASE("span wrappers check sizes") {
    std::vector<double> a(3), b(2), out(3);
    CHECK_THROWS_AS(kernels::multiply(a, b, out), ContractViolation);
    CHECK_THROWS_AS(kernels::dot(a, b), ContractViolation);
}

TEST_CASE("select switches the active table") {
    const Isa before = kernels::active().isa;
    kernels::select(Isa::scalar);
    CHECK(kernels::active().isa == Isa::scalar);
    kernels::select(before);
    CHECK(kernels::active().isa == before);
}
