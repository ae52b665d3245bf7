#include "dtgv/direction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace dtgv {

EdgeImage sobel_edges(const ImageGrid& b) {
  const std::size_t h = b.height();
  const std::size_t w = b.width();
  if (h < 3 || w < 3) {
    std::ostringstream msg;
    msg << "edge detection needs at least 3x3 pixels, got " << h << "x" << w;
    throw Error(ErrorCode::InvalidGrid, msg.str());
  }
  EdgeImage e;
  e.grid = b.grid();
  e.magnitude.assign(b.size(), 0.0);
  e.flags.assign(b.size(), 0);

  auto px = [&](long r, long c) {
    r = std::clamp(r, 0L, static_cast<long>(h) - 1);
    c = std::clamp(c, 0L, static_cast<long>(w) - 1);
    return b(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) {
      const long ri = static_cast<long>(r);
      const long ci = static_cast<long>(c);
      const double gx = (px(ri - 1, ci + 1) + 2.0 * px(ri, ci + 1) + px(ri + 1, ci + 1)) -
                        (px(ri - 1, ci - 1) + 2.0 * px(ri, ci - 1) + px(ri + 1, ci - 1));
      const double gy = (px(ri + 1, ci - 1) + 2.0 * px(ri + 1, ci) + px(ri + 1, ci + 1)) -
                        (px(ri - 1, ci - 1) + 2.0 * px(ri - 1, ci) + px(ri - 1, ci + 1));
      e.magnitude[e.grid.index(r, c)] = std::hypot(gx, gy);
    }
  }

  e.threshold = otsu_threshold(e.magnitude);
  for (std::size_t i = 0; i < e.magnitude.size(); ++i) {
    e.flags[i] = e.magnitude[i] > e.threshold ? 1 : 0;
  }
  return e;
}

double otsu_threshold(std::span<const double> values) {
  constexpr std::size_t kBins = 256;
  const double top = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  if (!(top > 0.0)) return 0.0;

  std::array<double, kBins> hist{};
  for (double v : values) {
    auto bin = static_cast<std::size_t>((v / top) * kBins);
    hist[std::min(bin, kBins - 1)] += 1.0;
  }
  const double total = static_cast<double>(values.size());
  double sum_all = 0.0;
  for (std::size_t k = 0; k < kBins; ++k) sum_all += static_cast<double>(k) * hist[k];

  double weight_bg = 0.0;
  double sum_bg = 0.0;
  double best = -1.0;
  std::size_t best_bin = 0;
  for (std::size_t k = 0; k + 1 < kBins; ++k) {
    weight_bg += hist[k];
    sum_bg += static_cast<double>(k) * hist[k];
    const double weight_fg = total - weight_bg;
    if (weight_bg == 0.0 || weight_fg == 0.0) continue;
    const double mean_bg = sum_bg / weight_bg;
    const double mean_fg = (sum_all - sum_bg) / weight_fg;
    const double between = weight_bg * weight_fg * (mean_bg - mean_fg) * (mean_bg - mean_fg);
    if (between > best) {
      best = between;
      best_bin = k;
    }
  }
  // Everything in the first bin is background.
  return top * static_cast<double>(best_bin + 1) / static_cast<double>(kBins);
}

EdgeImage apply_disk_mask(const EdgeImage& e) {
  EdgeImage out = e;
  const double cr = (static_cast<double>(e.grid.height) - 1.0) / 2.0;
  const double cc = (static_cast<double>(e.grid.width) - 1.0) / 2.0;
  const double radius = static_cast<double>(std::min(e.grid.height, e.grid.width)) / 2.0;
  for (std::size_t c = 0; c < e.grid.width; ++c) {
    for (std::size_t r = 0; r < e.grid.height; ++r) {
      const double dr = static_cast<double>(r) - cr;
      const double dc = static_cast<double>(c) - cc;
      if (std::sqrt(dr * dr + dc * dc) > radius) {
        const auto i = e.grid.index(r, c);
        out.magnitude[i] = 0.0;
        out.flags[i] = 0;
      }
    }
  }
  return out;
}

HoughAccumulator hough_transform(const EdgeImage& e, const DirectionConfig& config) {
  if (config.bins_per_degree < 1) {
    throw Error(ErrorCode::InvalidArgument, "Hough angle resolution must be >= 1 bin per degree");
  }
  const double hgt = static_cast<double>(e.grid.height);
  const double wid = static_cast<double>(e.grid.width);
  HoughAccumulator acc;
  acc.r_max = static_cast<int>(std::ceil(std::sqrt(hgt * hgt + wid * wid) / 2.0));
  const std::size_t ncols = static_cast<std::size_t>(180 * config.bins_per_degree);
  acc.angles_deg.resize(ncols);
  for (std::size_t k = 0; k < ncols; ++k) {
    acc.angles_deg[k] = -90.0 + static_cast<double>(k) / config.bins_per_degree;
  }
  acc.counts.assign(ncols * acc.rows(), 0.0);

  std::vector<double> cosv(ncols), sinv(ncols);
  for (std::size_t k = 0; k < ncols; ++k) {
    const double eta = acc.angles_deg[k] * std::numbers::pi / 180.0;
    cosv[k] = std::cos(eta);
    sinv[k] = std::sin(eta);
  }
  const double cr = (hgt - 1.0) / 2.0;
  const double cc = (wid - 1.0) / 2.0;
  const std::size_t nrows = acc.rows();
  for (std::size_t c = 0; c < e.grid.width; ++c) {
    for (std::size_t r = 0; r < e.grid.height; ++r) {
      const auto i = e.grid.index(r, c);
      if (!e.flags[i]) continue;
      const double vote = config.weighted_votes ? e.magnitude[i] : 1.0;
      const double x = static_cast<double>(c) - cc;
      const double y = cr - static_cast<double>(r);
      for (std::size_t k = 0; k < ncols; ++k) {
        const long rb = std::lround(x * cosv[k] + y * sinv[k]);
        acc.counts[k * nrows + static_cast<std::size_t>(rb + acc.r_max)] += vote;
      }
    }
  }
  return acc;
}

std::vector<double> angle_scores(const HoughAccumulator& h) {
  std::vector<double> scores(h.cols(), 0.0);
  const std::size_t nrows = h.rows();
  for (std::size_t k = 0; k < h.cols(); ++k) {
    double s = 0.0;
    for (std::size_t r = 0; r < nrows; ++r) {
      const double v = h.counts[k * nrows + r];
      s += v * v;
    }
    scores[k] = s;
  }
  return scores;
}

double eta_to_theta(double eta_max_deg) {
  const double deg = eta_max_deg >= 0.0 ? 90.0 - eta_max_deg : -90.0 - eta_max_deg;
  return deg * std::numbers::pi / 180.0;
}

std::size_t select_peak(const std::vector<double>& scores, const std::vector<double>& angles_deg) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) {
      best = k;
    } else if (scores[k] == scores[best]) {
      const double a = std::abs(angles_deg[k]);
      const double b = std::abs(angles_deg[best]);
      if (a < b || (a == b && angles_deg[k] > 0.0)) best = k;
    }
  }
  return best;
}

DirectionAnalysis analyze_direction(const ImageGrid& b, const DirectionConfig& config) {
  DirectionAnalysis out;
  out.edges = sobel_edges(b);
  out.masked = apply_disk_mask(out.edges);
  out.hough = hough_transform(out.masked, config);
  out.estimate.scores = angle_scores(out.hough);
  const auto& scores = out.estimate.scores;
  if (std::all_of(scores.begin(), scores.end(), [](double s) { return s == 0.0; })) {
    throw Error(ErrorCode::NoDirection, "no dominant direction: the edge image is empty");
  }
  const std::size_t k = select_peak(scores, out.hough.angles_deg);
  out.estimate.eta_max = out.hough.angles_deg[k];
  out.estimate.theta = eta_to_theta(out.estimate.eta_max);
  return out;
}

DirectionEstimate estimate_direction(const ImageGrid& b, const DirectionConfig& config) {
  return analyze_direction(b, config).estimate;
}

}  // namespace dtgv
