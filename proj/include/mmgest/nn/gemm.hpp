#pragma once

#include <cstddef>

namespace mmgest::nn {

// Row-major, single-threaded, fixed summation order (bitwise reproducible).
// When `accumulate` is false C is overwritten.

/// C[m x n] = A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
/// C[m x n] = A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
/// C[m x n] = A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);

}  // namespace mmgest::nn
