#include "mmgest/nn/gemm.hpp"

#include <algorithm>
#include <vector>

namespace mmgest::nn {

namespace {

constexpr std::size_t kColBlock = 512;
constexpr std::size_t kDepthBlock = 128;

// a(i, p) = a[i * row_stride + p * depth_stride]
void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t row_stride,
                  std::size_t depth_stride, const double* b, double* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t jn = std::min(kColBlock, n - j0);
    for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
      const std::size_t pn = std::min(kDepthBlock, k - p0);
      std::size_t i = 0;
      for (; i + 4 <= m; i += 4) {
        double* __restrict c0 = c + (i + 0) * n + j0;
        double* __restrict c1 = c + (i + 1) * n + j0;
        double* __restrict c2 = c + (i + 2) * n + j0;
        double* __restrict c3 = c + (i + 3) * n + j0;
        for (std::size_t p = p0; p < p0 + pn; ++p) {
          const double a0 = a[(i + 0) * row_stride + p * depth_stride];
          const double a1 = a[(i + 1) * row_stride + p * depth_stride];
          const double a2 = a[(i + 2) * row_stride + p * depth_stride];
          const double a3 = a[(i + 3) * row_stride + p * depth_stride];
          const double* __restrict brow = b + p * n + j0;
          for (std::size_t j = 0; j < jn; ++j) {
            const double bv = brow[j];
            c0[j] += a0 * bv;
            c1[j] += a1 * bv;
            c2[j] += a2 * bv;
            c3[j] += a3 * bv;
          }
        }
      }
      for (; i < m; ++i) {
        double* __restrict c0 = c + i * n + j0;
        for (std::size_t p = p0; p < p0 + pn; ++p) {
          const double a0 = a[i * row_stride + p * depth_stride];
          const double* __restrict brow = b + p * n + j0;
          for (std::size_t j = 0; j < jn; ++j) c0[j] += a0 * brow[j];
        }
      }
    }
  }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  gemm_strided(m, n, k, a, k, 1, b, c, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  gemm_strided(m, n, k, a, 1, m, b, c, accumulate);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  }
  gemm_strided(m, n, k, a, k, 1, bt.data(), c, accumulate);
}

}  // namespace mmgest::nn
