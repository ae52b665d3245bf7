#include "dtgv/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace dtgv {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const Complex* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

}  // namespace

std::shared_ptr<const Fft2> Fft2::for_grid(const Grid& grid) {
  static std::mutex cache_mutex;
  static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const Fft2>> cache;
  std::lock_guard lock(cache_mutex);
  auto key = std::make_pair(grid.height, grid.width);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto fft = std::make_shared<const Fft2>(grid);
  cache.emplace(key, fft);
  return fft;
}

Fft2::Fft2(const Grid& grid) : grid_(grid) {
  if (grid.height == 0 || grid.width == 0) {
    throw Error(ErrorCode::InvalidGrid, "FFT grid must be non-empty");
  }
  const int n0 = static_cast<int>(grid.width);   // slowest index in column-major
  const int n1 = static_cast<int>(grid.height);
  const auto n = grid.size();
  std::lock_guard lock(planner_mutex());
  auto* in = fftw_alloc_complex(n);
  auto* out = fftw_alloc_complex(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_2d(n0, n1, in, out, FFTW_FORWARD, flags);
  inverse_plan_ = fftw_plan_dft_2d(n0, n1, in, out, FFTW_BACKWARD, flags);
  fftw_free(in);
  fftw_free(out);
}

Fft2::~Fft2() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Fft2::forward(std::span<const Complex> in, std::span<Complex> out) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(in.data()),
                   as_fftw(out.data()));
}

void Fft2::inverse(std::span<const Complex> in, std::span<Complex> out) const {
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), as_fftw(in.data()),
                   as_fftw(out.data()));
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (auto& v : out) v *= scale;
}

void Fft2::forward_real(std::span<const double> in, std::span<Complex> out) const {
  ComplexVector tmp(in.begin(), in.end());
  forward(tmp, out);
}

double Fft2::inverse_real(std::span<const Complex> in, std::span<double> out) const {
  ComplexVector tmp(in.size());
  inverse(in, tmp);
  double max_imag = 0.0;
  for (std::size_t i = 0; i < tmp.size(); ++i) {
    out[i] = tmp[i].real();
    max_imag = std::max(max_imag, std::abs(tmp[i].imag()));
  }
  return max_imag;
}

}  // namespace dtgv
