#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "ansnse/grid.hpp"

namespace ansnse {

using Complex = std::complex<double>;
/// Half-spectrum coefficients, layout given by Grid::spectral_index.
using Coefficients = std::vector<Complex>;

namespace detail {

// One pair of r2c/c2r plans per grid shape. Plans are created under a lock
// (FFTW planning is not re-entrant) and executed through the new-array
// interface, which is safe from any number of threads.
class FftPlan {
 public:
  explicit FftPlan(std::array<int, 3> n) : n_(n) {
    const std::size_t real_size = static_cast<std::size_t>(n[0]) * n[1] * n[2];
    const std::size_t complex_size = static_cast<std::size_t>(n[0]) * n[1] * (n[2] / 2 + 1);
    std::vector<double> real(real_size);
    std::vector<Complex> spec(complex_size);
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_r2c_3d(n[0], n[1], n[2], real.data(), cplx, flags);
    inverse_ = fftw_plan_dft_c2r_3d(n[0], n[1], n[2], cplx, real.data(), flags);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  void forward(const double* in, Complex* out) const {
    // r2c leaves its input intact for out-of-place transforms.
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  /// c2r always clobbers its input, hence the by-value scratch.
  void inverse(std::vector<Complex> scratch, double* out) const {
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(scratch.data()), out);
  }

 private:
  std::array<int, 3> n_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

inline const FftPlan& plan_for(const std::array<int, 3>& n) {
  static std::mutex mutex;
  static std::map<std::array<int, 3>, std::unique_ptr<FftPlan>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlan>(n);
  return *slot;
}

}  // namespace detail

/// Normalized forward transform: c_k = (1/N) sum_x f(x) exp(-i k.x).
inline Coefficients forward_transform(const Grid& grid, std::span<const double> values) {
  Coefficients out(grid.spectral_size());
  detail::plan_for(grid.n()).forward(values.data(), out.data());
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& c : out) c *= scale;
  return out;
}

/// Inverse of forward_transform: f(x) = sum_k c_k exp(i k.x).
inline std::vector<double> inverse_transform(const Grid& grid, const Coefficients& coeffs) {
  std::vector<double> out(grid.size());
  detail::plan_for(grid.n()).inverse(coeffs, out.data());
  return out;
}

}  // namespace ansnse
