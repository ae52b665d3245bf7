#pragma once

#include <cstdint>
#include <vector>

#include "dtgv/image.hpp"

namespace dtgv {

/// Sobel edge magnitudes plus the binarized (Otsu) edge flags.
struct EdgeImage {
  Grid grid;
  std::vector<double> magnitude;
  std::vector<std::uint8_t> flags;
  double threshold = 0.0;
};

/// Line-voting accumulator over (offset r, normal angle eta).
///
/// Columns are normal angles eta = -90 .. 89 degrees (one per degree by
/// default); rows are integer offsets r = -r_max .. r_max measured from the
/// image centre, with y pointing up. counts is column-major, so each angle
/// column is contiguous.
struct HoughAccumulator {
  std::vector<double> angles_deg;
  int r_max = 0;
  std::vector<double> counts;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(2 * r_max + 1); }
  std::size_t cols() const noexcept { return angles_deg.size(); }
  double at(int r, std::size_t col) const {
    return counts[col * rows() + static_cast<std::size_t>(r + r_max)];
  }
};

struct DirectionConfig {
  /// Angle columns per degree; 1 gives the 180-column accumulator.
  int bins_per_degree = 1;
  /// Vote with edge magnitudes instead of binary flags.
  bool weighted_votes = false;
};

struct DirectionEstimate {
  double theta = 0.0;    ///< radians; stripe direction fed to the directional operators
  double eta_max = 0.0;  ///< degrees; winning Hough normal angle
  std::vector<double> scores;
};

/// Everything the estimator computes, kept for debug dumps.
struct DirectionAnalysis {
  EdgeImage edges;
  EdgeImage masked;
  HoughAccumulator hough;
  DirectionEstimate estimate;
};

EdgeImage sobel_edges(const ImageGrid& b);
EdgeImage apply_disk_mask(const EdgeImage& e);
HoughAccumulator hough_transform(const EdgeImage& e, const DirectionConfig& config = {});
std::vector<double> angle_scores(const HoughAccumulator& h);

/// Otsu threshold on a 256-bin histogram over [0, max(values)].
double otsu_threshold(std::span<const double> values);

/// Maps the winning normal angle (degrees) to the texture direction (radians).
double eta_to_theta(double eta_max_deg);

/// Index of the best score; ties go to the smallest |eta|, then to eta > 0.
std::size_t select_peak(const std::vector<double>& scores, const std::vector<double>& angles_deg);

DirectionAnalysis analyze_direction(const ImageGrid& b, const DirectionConfig& config = {});
DirectionEstimate estimate_direction(const ImageGrid& b, const DirectionConfig& config = {});

}  // namespace dtgv
