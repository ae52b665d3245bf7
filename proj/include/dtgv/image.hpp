#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dtgv/error.hpp"

namespace dtgv {

/// Grid dimensions. Pixel (row r, col c) lives at linear index c*height + r.
struct Grid {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return height * width; }
  std::size_t index(std::size_t r, std::size_t c) const noexcept {
    return c * height + r;
  }
  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Real-valued image stored column-major.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(std::size_t height, std::size_t width, double fill = 0.0);
  ImageGrid(Grid grid, std::vector<double> data);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t height() const noexcept { return grid_.height; }
  std::size_t width() const noexcept { return grid_.width; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[grid_.index(r, c)]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[grid_.index(r, c)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double min() const;
  double max() const;
  bool all_finite() const noexcept;

 private:
  Grid grid_;
  std::vector<double> data_;
};

/// Fixed number of n-blocks sharing one grid; block k occupies [k*n, (k+1)*n).
template <std::size_t Blocks>
class StackedField {
 public:
  static constexpr std::size_t kBlocks = Blocks;

  StackedField() = default;
  explicit StackedField(Grid grid) : grid_(grid), data_(Blocks * grid.size(), 0.0) {}

  const Grid& grid() const noexcept { return grid_; }
  std::size_t block_size() const noexcept { return grid_.size(); }

  std::span<double> block(std::size_t k) {
    return std::span<double>(data_).subspan(k * grid_.size(), grid_.size());
  }
  std::span<const double> block(std::size_t k) const {
    return std::span<const double>(data_).subspan(k * grid_.size(), grid_.size());
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

 private:
  Grid grid_;
  std::vector<double> data_;
};

using StackedField2 = StackedField<2>;
using StackedField4 = StackedField<4>;

void require_same_grid(const Grid& a, const Grid& b, const char* what);

// Plain vector helpers shared by the solver, metrics and tests.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double distance2(std::span<const double> a, std::span<const double> b);

}  // namespace dtgv
