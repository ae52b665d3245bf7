#include "dtgv/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dtgv {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidGrid: return "invalid-grid";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::SingularFactor: return "singular-factor";
    case ErrorCode::NoDirection: return "no-direction";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Calibration: return "calibration";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, double fill)
    : grid_{height, width}, data_(height * width, fill) {
  if (height == 0 || width == 0) {
    throw Error(ErrorCode::InvalidGrid, "image dimensions must be positive");
  }
}

ImageGrid::ImageGrid(Grid grid, std::vector<double> data)
    : grid_(grid), data_(std::move(data)) {
  if (grid.height == 0 || grid.width == 0) {
    throw Error(ErrorCode::InvalidGrid, "image dimensions must be positive");
  }
  if (data_.size() != grid.size()) {
    std::ostringstream msg;
    msg << "image data length " << data_.size() << " does not match "
        << grid.height << "x" << grid.width;
    throw Error(ErrorCode::InvalidGrid, msg.str());
  }
}

double ImageGrid::min() const { return *std::min_element(data_.begin(), data_.end()); }
double ImageGrid::max() const { return *std::max_element(data_.begin(), data_.end()); }

bool ImageGrid::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) {
    std::ostringstream msg;
    msg << what << ": grid " << a.height << "x" << a.width << " vs " << b.height
        << "x" << b.width;
    throw Error(ErrorCode::ShapeMismatch, msg.str());
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double distance2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace dtgv
