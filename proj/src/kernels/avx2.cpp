#include "mlenkf/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

// Compiled for the baseline target; only the functions below carry the avx2
// attribute, so nothing AVX2-encoded leaks into shared inline code. "fma" is
// deliberately not enabled: results must match the scalar path exactly.
#define MLENKF_AVX2 __attribute__((target("avx2")))

namespace mlenkf::kernels {
namespace {

MLENKF_AVX2 void multiply_avx2(const double* a, const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * x[i];
}

MLENKF_AVX2 void propagate_avx2(const double* factor, const double* noise, double* u,
                                std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d fu = _mm256_mul_pd(_mm256_loadu_pd(factor + i), _mm256_loadu_pd(u + i));
        _mm256_storeu_pd(u + i, _mm256_add_pd(fu, _mm256_loadu_pd(noise + i)));
    }
    for (; i < n; ++i) u[i] = factor[i] * u[i] + noise[i];
}

MLENKF_AVX2 void propagate_coupled_avx2(const double* factor, const double* weight,
                                        const double* r_even, const double* r_odd, double* u,
                                        std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d fu = _mm256_mul_pd(_mm256_loadu_pd(factor + i), _mm256_loadu_pd(u + i));
        const __m256d wr = _mm256_mul_pd(_mm256_loadu_pd(weight + i), _mm256_loadu_pd(r_even + i));
        _mm256_storeu_pd(u + i, _mm256_add_pd(_mm256_add_pd(fu, wr), _mm256_loadu_pd(r_odd + i)));
    }
    for (; i < n; ++i) u[i] = factor[i] * u[i] + weight[i] * r_even[i] + r_odd[i];
}

MLENKF_AVX2 void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), ax));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

MLENKF_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) sum += x[i] * y[i];
    return sum;
}

constexpr KernelTable kAvx2{Isa::avx2,           multiply_avx2, propagate_avx2,
                            propagate_coupled_avx2, axpy_avx2,     dot_avx2};

}  // namespace

const KernelTable* detail::avx2_table() { return &kAvx2; }

}  // namespace mlenkf::kernels

#else

namespace mlenkf::kernels {
const KernelTable* detail::avx2_table() { return nullptr; }
}  // namespace mlenkf::kernels

#endif
