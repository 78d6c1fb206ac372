#pragma once

#include <cstddef>
#include <string>

// Dense double-precision kernels used by the tensor layer. Every entry point
// exists as a portable scalar reference; wider variants (AVX2+FMA) are
// selected once at runtime after a cpuid probe. All matrices are row-major.
namespace coagents::kern {

struct Kernels {
    const char* name;

    // out = sum_i x[i] * y[i]
    double (*dot)(std::size_t n, const double* x, const double* y);
    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // x[i] *= a
    void (*scale)(std::size_t n, double a, double* x);
    // out[i] = x[i] + y[i]
    void (*vadd)(std::size_t n, const double* x, const double* y, double* out);
    // out[i] = x[i] * y[i]
    void (*vmul)(std::size_t n, const double* x, const double* y, double* out);
    // sum of x
    double (*vsum)(std::size_t n, const double* x);

    // C (m x n) += A (m x k) * B (k x n)
    void (*matmul_nn_acc)(std::size_t m, std::size_t k, std::size_t n,
                          const double* A, const double* B, double* C);
    // C (m x n) += A (m x k) * B^T, B given as (n x k)
    void (*matmul_nt_acc)(std::size_t m, std::size_t k, std::size_t n,
                          const double* A, const double* B, double* C);
    // C (k x n) += A^T * B, A given as (m x k), B as (m x n)
    void (*matmul_tn_acc)(std::size_t m, std::size_t k, std::size_t n,
                          const double* A, const double* B, double* C);
};

// Reference implementation; always available, used as the oracle in the
// equivalence tests.
const Kernels& scalar();

// Widest implementation the CPU supports (falls back to scalar()).
const Kernels& active();

// Force a specific implementation ("scalar", "avx2") for the rest of the
// process; throws std::invalid_argument for unknown or unsupported names.
// The COAGENTS_KERNELS environment variable applies the same override at
// startup.
void force(const std::string& name);

bool avx2_available();

}  // namespace coagents::kern
