#pragma once
// Mode-wise arithmetic kernels used by the propagators and the ensemble
// update. Every kernel has a scalar reference implementation; AVX2 (x86-64)
// and NEON (aarch64) variants are selected at runtime.
//
// Elementwise kernels are bit-identical across variants (no FMA contraction,
// identical operation order). Reductions (dot) differ only by summation order.

#include <cstddef>
#include <span>
#include <string_view>

#include "mlenkf/errors.hpp"

namespace mlenkf::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
    Isa isa;
    // out[i] = a[i] * x[i]
    void (*multiply)(const double* a, const double* x, double* out, std::size_t n);
    // u[i] = factor[i] * u[i] + noise[i]
    void (*propagate)(const double* factor, const double* noise, double* u, std::size_t n);
    // u[i] = factor[i] * u[i] + weight[i] * r_even[i] + r_odd[i]
    void (*propagate_coupled)(const double* factor, const double* weight, const double* r_even,
                              const double* r_odd, double* u, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
};

std::string_view isa_name(Isa isa);

/// True if the variant was compiled in and the running CPU supports it.
bool available(Isa isa);

/// Table for a specific variant; throws ContractViolation if unavailable.
const KernelTable& table(Isa isa);

/// Table used by the library. Defaults to the best available variant; the
/// environment variable MLENKF_ISA=scalar|avx2|neon overrides the choice.
const KernelTable& active();

/// Force a variant for the remainder of the process (tests, benchmarks).
void select(Isa isa);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();
}  // namespace detail

inline void multiply(std::span<const double> a, std::span<const double> x, std::span<double> out) {
    require(a.size() >= out.size() && x.size() >= out.size(), "multiply: operand shorter than output");
    active().multiply(a.data(), x.data(), out.data(), out.size());
}

inline void propagate(std::span<const double> factor, std::span<const double> noise,
                      std::span<double> u) {
    require(factor.size() >= u.size() && noise.size() >= u.size(),
            "propagate: operand shorter than state");
    active().propagate(factor.data(), noise.data(), u.data(), u.size());
}

inline void propagate_coupled(std::span<const double> factor, std::span<const double> weight,
                              std::span<const double> r_even, std::span<const double> r_odd,
                              std::span<double> u) {
    require(factor.size() >= u.size() && weight.size() >= u.size() &&
                r_even.size() >= u.size() && r_odd.size() >= u.size(),
            "propagate_coupled: operand shorter than state");
    active().propagate_coupled(factor.data(), weight.data(), r_even.data(), r_odd.data(), u.data(),
                               u.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    require(x.size() >= y.size(), "axpy: x shorter than y");
    active().axpy(a, x.data(), y.data(), y.size());
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "dot: length mismatch");
    return active().dot(x.data(), y.data(), x.size());
}

}  // namespace mlenkf::kernels
