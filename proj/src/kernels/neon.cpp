#include "mlenkf/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace mlenkf::kernels {
namespace {

void multiply_neon(const double* a, const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(x + i)));
    for (; i < n; ++i) out[i] = a[i] * x[i];
}

// vfmaq would fuse the rounding; separate mul/add keeps parity with scalar.
void propagate_neon(const double* factor, const double* noise, double* u, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t fu = vmulq_f64(vld1q_f64(factor + i), vld1q_f64(u + i));
        vst1q_f64(u + i, vaddq_f64(fu, vld1q_f64(noise + i)));
    }
    for (; i < n; ++i) u[i] = factor[i] * u[i] + noise[i];
}

void propagate_coupled_neon(const double* factor, const double* weight, const double* r_even,
                            const double* r_odd, double* u, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t fu = vmulq_f64(vld1q_f64(factor + i), vld1q_f64(u + i));
        const float64x2_t wr = vmulq_f64(vld1q_f64(weight + i), vld1q_f64(r_even + i));
        vst1q_f64(u + i, vaddq_f64(vaddq_f64(fu, wr), vld1q_f64(r_odd + i)));
    }
    for (; i < n; ++i) u[i] = factor[i] * u[i] + weight[i] * r_even[i] + r_odd[i];
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) sum += x[i] * y[i];
    return sum;
}

constexpr KernelTable kNeon{Isa::neon,           multiply_neon, propagate_neon,
                            propagate_coupled_neon, axpy_neon,     dot_neon};

}  // namespace

const KernelTable* detail::neon_table() { return &kNeon; }

}  // namespace mlenkf::kernels

#else

namespace mlenkf::kernels {
const KernelTable* detail::neon_table() { return nullptr; }
}  // namespace mlenkf::kernels

#endif
