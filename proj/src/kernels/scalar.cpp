#include "mlenkf/kernels.hpp"

namespace mlenkf::kernels {
namespace {

void multiply_scalar(const double* a, const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * x[i];
}

void propagate_scalar(const double* factor, const double* noise, double* u, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) u[i] = factor[i] * u[i] + noise[i];
}

void propagate_coupled_scalar(const double* factor, const double* weight, const double* r_even,
                              const double* r_odd, double* u, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) u[i] = factor[i] * u[i] + weight[i] * r_even[i] + r_odd[i];
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += x[i] * y[i];
    return sum;
}

constexpr KernelTable kScalar{Isa::scalar,      multiply_scalar, propagate_scalar,
                              propagate_coupled_scalar, axpy_scalar,     dot_scalar};

}  // namespace

const KernelTable& detail::scalar_table() { return kScalar; }

}  // namespace mlenkf::kernels
