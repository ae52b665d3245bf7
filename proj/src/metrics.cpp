#include "dtgv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace dtgv {
namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const int half = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable 'valid' filtering: output is (h - k + 1) x (w - k + 1).
ImageGrid filter_valid(const ImageGrid& img, const std::vector<double>& k) {
  const std::size_t ks = k.size();
  const std::size_t oh = img.height() - ks + 1;
  const std::size_t ow = img.width() - ks + 1;
  ImageGrid rows_done(oh, img.width());
  for (std::size_t c = 0; c < img.width(); ++c) {
    for (std::size_t r = 0; r < oh; ++r) {
      double s = 0.0;
      for (std::size_t t = 0; t < ks; ++t) s += k[t] * img(r + t, c);
      rows_done(r, c) = s;
    }
  }
  ImageGrid out(oh, ow);
  for (std::size_t c = 0; c < ow; ++c) {
    for (std::size_t r = 0; r < oh; ++r) {
      double s = 0.0;
      for (std::size_t t = 0; t < ks; ++t) s += k[t] * rows_done(r, c + t);
      out(r, c) = s;
    }
  }
  return out;
}

ImageGrid product(const ImageGrid& a, const ImageGrid& b) {
  ImageGrid out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace

double rmse(const ImageGrid& u, const ImageGrid& u_ref) {
  require_same_grid(u.grid(), u_ref.grid(), "rmse");
  return distance2(u.values(), u_ref.values()) / std::sqrt(static_cast<double>(u.size()));
}

double isnr(const ImageGrid& b, const ImageGrid& u_rec, const ImageGrid& u_ref) {
  require_same_grid(b.grid(), u_ref.grid(), "isnr");
  require_same_grid(u_rec.grid(), u_ref.grid(), "isnr");
  const double num = distance2(b.values(), u_ref.values());
  const double den = distance2(u_rec.values(), u_ref.values());
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(num / den);
}

ImageGrid ssim_map(const ImageGrid& u, const ImageGrid& u_ref, const SsimConfig& config) {
  require_same_grid(u.grid(), u_ref.grid(), "ssim");
  const auto ws = static_cast<std::size_t>(config.window);
  if (u.height() < ws || u.width() < ws) {
    std::ostringstream msg;
    msg << "SSIM needs images of at least " << ws << "x" << ws;
    throw Error(ErrorCode::InvalidGrid, msg.str());
  }
  const auto k = gaussian_window(config.window, config.sigma);
  const double c1 = std::pow(config.k1 * config.dynamic_range, 2);
  const double c2 = std::pow(config.k2 * config.dynamic_range, 2);

  const ImageGrid mx = filter_valid(u, k);
  const ImageGrid my = filter_valid(u_ref, k);
  const ImageGrid sxx = filter_valid(product(u, u), k);
  const ImageGrid syy = filter_valid(product(u_ref, u_ref), k);
  const ImageGrid sxy = filter_valid(product(u, u_ref), k);

  ImageGrid out(mx.height(), mx.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cxy = sxy[i] - mx[i] * my[i];
    out[i] = ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return out;
}

double mssim(const ImageGrid& u, const ImageGrid& u_ref, const SsimConfig& config) {
  const ImageGrid map = ssim_map(u, u_ref, config);
  double s = 0.0;
  for (double v : map.data()) s += v;
  return s / static_cast<double>(map.size());
}

QualityRecord evaluate(const std::string& label, const ImageGrid& b, const ImageGrid& u_rec,
                       const ImageGrid& u_ref) {
  return QualityRecord{label, rmse(u_rec, u_ref), isnr(b, u_rec, u_ref), mssim(u_rec, u_ref)};
}

std::string csv_header(const QualityRecord&) { return "label,RMSE,ISNR,MSSIM"; }

std::string csv_row(const QualityRecord& q) {
  std::ostringstream s;
  s << q.label << ',' << std::setprecision(8) << q.rmse << ',' << q.isnr << ',' << q.mssim;
  return s.str();
}

std::vector<ImageGrid> scaled_error_images(const std::vector<ImageGrid>& restorations,
                                           const ImageGrid& u_ref) {
  std::vector<ImageGrid> errors;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& u : restorations) {
    require_same_grid(u.grid(), u_ref.grid(), "scaled_error_images");
    ImageGrid e(u.height(), u.width());
    for (std::size_t i = 0; i < u.size(); ++i) e[i] = std::abs(u[i] - u_ref[i]);
    lo = std::min(lo, e.min());
    hi = std::max(hi, e.max());
    errors.push_back(std::move(e));
  }
  const double span = hi - lo;
  for (auto& e : errors) {
    for (double& v : e.data()) v = span > 0.0 ? (v - lo) / span : 0.0;
  }
  return errors;
}

}  // namespace dtgv
