#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "dtgv/image.hpp"

namespace dtgv {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// 2-D DFT on a column-major grid, backed by FFTW.
///
/// Forward is unnormalized; inverse carries the 1/n factor. Plans are built
/// with FFTW_ESTIMATE so results are reproducible run to run. Instances are
/// shared through `for_grid` and executing them is thread-safe; only plan
/// construction takes the global planner lock.
class Fft2 {
 public:
  static std::shared_ptr<const Fft2> for_grid(const Grid& grid);

  explicit Fft2(const Grid& grid);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  const Grid& grid() const noexcept { return grid_; }

  void forward(std::span<const Complex> in, std::span<Complex> out) const;
  void inverse(std::span<const Complex> in, std::span<Complex> out) const;

  /// Forward transform of a real field.
  void forward_real(std::span<const double> in, std::span<Complex> out) const;

  /// Inverse transform whose real part is written to `out`. Returns the
  /// largest |imaginary part| seen, which is ~0 for Hermitian input.
  double inverse_real(std::span<const Complex> in, std::span<double> out) const;

 private:
  Grid grid_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace dtgv
