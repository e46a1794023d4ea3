#include "mmgest/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace mmgest {

namespace {

// FFTW's planner is not thread-safe; execution with the new-array interface is.
// FFTW_UNALIGNED makes the result independent of buffer alignment, which keeps
// output bit-identical between runs.
fftw_plan plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  auto* buf = fftw_alloc_complex(n);
  fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  plans.emplace(n, p);
  return p;
}

}  // namespace

void fft_forward(std::span<std::complex<double>> data) {
  if (data.size() < 2) return;
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(data.size()), ptr, ptr);
}

}  // namespace mmgest
