#include "dollard/fft_workspace.hpp"
#include <fftw3.h>
#include <map>
#include <memory>
#include <mutex>
#include <new>

namespace dollard {

namespace {
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

FftWorkspace::FftWorkspace(std::size_t n) : m_n(n) {
  std::lock_guard lock(planner_mutex());
  m_buf = reinterpret_cast<std::complex<double> *>(
      fftw_malloc(sizeof(fftw_complex) * n));
  if (!m_buf)
    throw std::bad_alloc();
  auto *b = reinterpret_cast<fftw_complex *>(m_buf);
  const int len = static_cast<int>(n);
  // FFTW_ESTIMATE keeps the chosen algorithm (and hence the roundoff
  // pattern) independent of timing, so runs are bit-reproducible.
  m_plan_fwd = fftw_plan_dft_1d(len, b, b, FFTW_FORWARD, FFTW_ESTIMATE);
  m_plan_bwd = fftw_plan_dft_1d(len, b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftWorkspace::~FftWorkspace() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(m_plan_fwd));
  fftw_destroy_plan(static_cast<fftw_plan>(m_plan_bwd));
  fftw_free(m_buf);
}

void FftWorkspace::forward() { fftw_execute(static_cast<fftw_plan>(m_plan_fwd)); }

void FftWorkspace::backward() { fftw_execute(static_cast<fftw_plan>(m_plan_bwd)); }

FftWorkspace &FftWorkspace::for_thread(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<FftWorkspace>> cache;
  auto &slot = cache[n];
  if (!slot)
    slot = std::make_unique<FftWorkspace>(n);
  return *slot;
}

} // namespace dollard
