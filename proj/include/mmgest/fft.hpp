#pragma once

#include <complex>
#include <span>

namespace mmgest {

/// In-place forward DFT, X[k] = sum_n x[n] exp(-2*pi*i*k*n/N), any length.
/// Plans are cached per length and shared across threads.
void fft_forward(std::span<std::complex<double>> data);

}  // namespace mmgest
