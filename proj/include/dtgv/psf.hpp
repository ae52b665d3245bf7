#pragma once

#include <cstddef>
#include <vector>

namespace dtgv {

/// Odd-sized nonnegative blur kernel. Offsets (di, dj) run over
/// [-rows/2, rows/2] x [-cols/2, cols/2]; weights are stored column-major.
struct PsfKernel {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::vector<double> weights{1.0};
  bool normalized = true;

  int half_rows() const noexcept { return static_cast<int>(rows / 2); }
  int half_cols() const noexcept { return static_cast<int>(cols / 2); }
  double at(int di, int dj) const {
    return weights[static_cast<std::size_t>(dj + half_cols()) * rows +
                   static_cast<std::size_t>(di + half_rows())];
  }
  double sum() const noexcept {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  static PsfKernel delta() { return PsfKernel{}; }
};

}  // namespace dtgv
