#pragma once
// Minimal RAII wrapper over FFTW's 2-D complex transform. FFTW's planner is
// not re-entrant, so plan creation and destruction are serialized.

#include <complex>
#include <cstring>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace avivis {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace detail

class Fft2d {
 public:
  using cplx = std::complex<double>;

  Fft2d(int height, int width) : h_(height), w_(width) {
    const std::size_t n = static_cast<std::size_t>(h_) * w_;
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_2d(h_, w_, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_2d(h_, w_, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2d() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(buf_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  int height() const { return h_; }
  int width() const { return w_; }

  // Unnormalized forward transform, in place on row-major data.
  void forward(std::vector<cplx>& data) { run(fwd_, data); }
  // Unnormalized backward transform (caller divides by h*w).
  void inverse(std::vector<cplx>& data) { run(inv_, data); }

 private:
  void run(fftw_plan plan, std::vector<cplx>& data) {
    const std::size_t n = static_cast<std::size_t>(h_) * w_;
    std::memcpy(buf_, data.data(), sizeof(fftw_complex) * n);
    fftw_execute(plan);
    std::memcpy(static_cast<void*>(data.data()), buf_, sizeof(fftw_complex) * n);
  }

  int h_, w_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace avivis
