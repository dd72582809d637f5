#pragma once
#include <complex>
#include <cstddef>
#include <span>

namespace dollard {

//! Owns a pair of FFTW plans and aligned buffers for one transform length.
//! Plans are created under a global lock (FFTW's planner is not
//! thread-safe); execution is lock-free, so each worker holds its own
//! workspace. The transforms are unnormalised:
//!   forward:  out_m = sum_j in_j e^{-2 pi i m j / n}
//!   backward: out_j = sum_m in_m e^{+2 pi i m j / n}
class FftWorkspace {
public:
  explicit FftWorkspace(std::size_t n);
  ~FftWorkspace();
  FftWorkspace(const FftWorkspace &) = delete;
  FftWorkspace &operator=(const FftWorkspace &) = delete;

  std::size_t size() const { return m_n; }

  //! In-place transforms of the internal buffer.
  void forward();
  void backward();

  std::span<std::complex<double>> buffer() { return {m_buf, m_n}; }

  //! Workspace cached per thread and per length.
  static FftWorkspace &for_thread(std::size_t n);

private:
  std::size_t m_n;
  std::complex<double> *m_buf;
  void *m_plan_fwd;
  void *m_plan_bwd;
};

} // namespace dollard
