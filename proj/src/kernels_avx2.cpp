#include "coagents/kernels.hpp"

#if defined(COAGENTS_BUILD_AVX2)

#include <immintrin.h>

// AVX2 + FMA variants: 4-wide double main loop, scalar tail. Only reached
// through the dispatch table once the cpuid probe confirmed support.
namespace coagents::kern {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double out = hsum(acc);
    for (; i < n; ++i) out += x[i] * y[i];
    return out;
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(std::size_t n, double a, double* x) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void vadd_avx2(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void vmul_avx2(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

double vsum_avx2(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double out = hsum(acc);
    for (; i < n; ++i) out += x[i];
    return out;
}

void matmul_nn_avx2(std::size_t m, std::size_t k, std::size_t n,
                    const double* A, const double* B, double* C) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d va = _mm256_set1_pd(A[i * k + p]);
            const double* brow = B + p * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d vc = _mm256_loadu_pd(crow + j);
                vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc);
                _mm256_storeu_pd(crow + j, vc);
            }
            const double a = A[i * k + p];
            for (; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void matmul_nt_avx2(std::size_t m, std::size_t k, std::size_t n,
                    const double* A, const double* B, double* C) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        for (std::size_t j = 0; j < n; ++j)
            C[i * n + j] += dot_avx2(k, arow, B + j * k);
    }
}

void matmul_tn_avx2(std::size_t m, std::size_t k, std::size_t n,
                    const double* A, const double* B, double* C) {
    for (std::size_t p = 0; p < m; ++p) {
        const double* arow = A + p * k;
        const double* brow = B + p * n;
        for (std::size_t i = 0; i < k; ++i) axpy_avx2(n, arow[i], brow, C + i * n);
    }
}

}  // namespace

const Kernels* avx2_kernels() {
    static const Kernels k = {
        "avx2",
        dot_avx2, axpy_avx2, scale_avx2,
        vadd_avx2, vmul_avx2, vsum_avx2,
        matmul_nn_avx2, matmul_nt_avx2, matmul_tn_avx2,
    };
    return &k;
}

}  // namespace coagents::kern

#else

namespace coagents::kern {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace coagents::kern

#endif
