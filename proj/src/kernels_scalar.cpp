#include "coagents/kernels.hpp"

// Plain loop nests, kept branch-free and simple: these are the semantics the
// vector variants must reproduce (up to floating-point reassociation).
namespace coagents::kern {
namespace {

double dot_scalar(std::size_t n, const double* x, const double* y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void vadd_scalar(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void vmul_scalar(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

double vsum_scalar(std::size_t n, const double* x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void matmul_nn_scalar(std::size_t m, std::size_t k, std::size_t n,
                      const double* A, const double* B, double* C) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double a = A[i * k + p];
            const double* brow = B + p * n;
            double* crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void matmul_nt_scalar(std::size_t m, std::size_t k, std::size_t n,
                      const double* A, const double* B, double* C) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = B + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            C[i * n + j] += acc;
        }
    }
}

void matmul_tn_scalar(std::size_t m, std::size_t k, std::size_t n,
                      const double* A, const double* B, double* C) {
    for (std::size_t p = 0; p < m; ++p) {
        const double* arow = A + p * k;
        const double* brow = B + p * n;
        for (std::size_t i = 0; i < k; ++i) {
            const double a = arow[i];
            double* crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

}  // namespace

const Kernels& scalar() {
    static const Kernels k = {
        "scalar",
        dot_scalar, axpy_scalar, scale_scalar,
        vadd_scalar, vmul_scalar, vsum_scalar,
        matmul_nn_scalar, matmul_nt_scalar, matmul_tn_scalar,
    };
    return k;
}

}  // namespace coagents::kern
