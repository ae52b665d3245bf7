#include "dtgv/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace dtgv {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void require_odd(std::size_t size) {
  if (size == 0 || size % 2 == 0) {
    std::ostringstream msg;
    msg << "PSF size must be odd, got " << size;
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
}

void normalize(PsfKernel& k) {
  const double s = k.sum();
  for (double& w : k.weights) w /= s;
  k.normalized = true;
}

// Uniform in [0, 1) from a 64-bit mt19937 draw; avoids the
// implementation-defined std distributions so phantoms are portable.
double unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

PsfKernel gaussian_psf(double variance, std::size_t size) {
  if (!(variance > 0.0)) throw Error(ErrorCode::InvalidArgument, "Gaussian variance must be > 0");
  require_odd(size);
  PsfKernel k;
  k.rows = k.cols = size;
  k.weights.assign(size * size, 0.0);
  const int half = static_cast<int>(size / 2);
  for (int j = -half; j <= half; ++j) {
    for (int i = -half; i <= half; ++i) {
      k.weights[static_cast<std::size_t>(j + half) * size + static_cast<std::size_t>(i + half)] =
          std::exp(-static_cast<double>(i * i + j * j) / (2.0 * variance));
    }
  }
  normalize(k);
  return k;
}

PsfKernel out_of_focus_psf(double radius, std::size_t size) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "disk radius must be > 0");
  require_odd(size);
  if (static_cast<double>(size) < 2.0 * radius + 1.0) {
    std::ostringstream msg;
    msg << "PSF size " << size << " too small for disk radius " << radius;
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  constexpr int kSub = 8;
  PsfKernel k;
  k.rows = k.cols = size;
  k.weights.assign(size * size, 0.0);
  const int half = static_cast<int>(size / 2);
  const double r2 = radius * radius;
  for (int j = -half; j <= half; ++j) {
    for (int i = -half; i <= half; ++i) {
      int inside = 0;
      for (int sj = 0; sj < kSub; ++sj) {
        const double y = j - 0.5 + (sj + 0.5) / kSub;
        for (int si = 0; si < kSub; ++si) {
          const double x = i - 0.5 + (si + 0.5) / kSub;
          if (x * x + y * y <= r2) ++inside;
        }
      }
      k.weights[static_cast<std::size_t>(j + half) * size + static_cast<std::size_t>(i + half)] =
          static_cast<double>(inside) / (kSub * kSub);
    }
  }
  normalize(k);
  return k;
}

std::size_t default_disk_size(double radius) {
  return 2 * static_cast<std::size_t>(std::ceil(radius)) + 1;
}

std::size_t default_gaussian_size(double variance) {
  return 2 * static_cast<std::size_t>(std::ceil(3.0 * std::sqrt(variance))) + 1;
}

PsfKernel PsfChoice::build() const {
  if (type == PsfType::OutOfFocus) {
    return out_of_focus_psf(parameter, size ? size : default_disk_size(parameter));
  }
  return gaussian_psf(parameter, size ? size : default_gaussian_size(parameter));
}

std::string PsfChoice::describe() const {
  std::ostringstream s;
  s << (type == PsfType::OutOfFocus ? "out-of-focus radius=" : "gaussian variance=") << parameter
    << " size=" << (size ? size
                         : (type == PsfType::OutOfFocus ? default_disk_size(parameter)
                                                        : default_gaussian_size(parameter)));
  return s.str();
}

ImageGrid make_stripe_phantom(std::size_t height, std::size_t width, double theta_true,
                              StripeProfile profile, int num_stripes, std::uint64_t seed) {
  if (num_stripes < 2) throw Error(ErrorCode::InvalidArgument, "need at least two stripes");
  std::mt19937_64 gen(seed);

  const double cr = (static_cast<double>(height) - 1.0) / 2.0;
  const double cc = (static_cast<double>(width) - 1.0) / 2.0;
  const double extent = std::hypot(cr + 1.0, cc + 1.0);

  // Stripe boundaries along the normal coordinate s in [-extent, extent].
  std::vector<double> edges(static_cast<std::size_t>(num_stripes) + 1);
  std::vector<double> widths(static_cast<std::size_t>(num_stripes));
  double total = 0.0;
  for (auto& w : widths) {
    w = 0.5 + unit(gen);
    total += w;
  }
  edges[0] = -extent;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    edges[k + 1] = edges[k] + 2.0 * extent * widths[k] / total;
  }

  std::vector<double> level(widths.size()), slope(widths.size());
  for (std::size_t k = 0; k < widths.size(); ++k) {
    do {
      level[k] = 0.1 + 0.8 * unit(gen);
    } while (k > 0 && std::abs(level[k] - level[k - 1]) < 0.25);
    slope[k] = profile == StripeProfile::Affine ? 0.3 * (unit(gen) - 0.5) : 0.0;
  }

  auto intensity = [&](double s) {
    auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, s);
    const auto k = static_cast<std::size_t>(it - (edges.begin() + 1));
    const double mid = 0.5 * (edges[k] + edges[k + 1]);
    const double t = (s - mid) / (edges[k + 1] - edges[k]);
    return std::clamp(level[k] + slope[k] * t, 0.0, 1.0);
  };

  // Normal to the stripes in (column, row) coordinates: (-sin, cos).
  const double nc = -std::sin(theta_true);
  const double nr = std::cos(theta_true);
  constexpr int kSub = 4;
  ImageGrid u(height, width);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) {
      double acc = 0.0;
      for (int sc = 0; sc < kSub; ++sc) {
        const double x = static_cast<double>(c) - cc - 0.5 + (sc + 0.5) / kSub;
        for (int sr = 0; sr < kSub; ++sr) {
          const double y = static_cast<double>(r) - cr - 0.5 + (sr + 0.5) / kSub;
          acc += intensity(nc * x + nr * y);
        }
      }
      u(r, c) = acc / (kSub * kSub);
    }
  }
  return u;
}

double poisson_snr(double n_exact, double n_background) {
  return 10.0 * std::log10(n_exact / std::sqrt(n_exact + n_background));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

std::uint64_t CounterRng::next_u64() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

double CounterRng::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t sample_poisson(double mean, CounterRng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw Error(ErrorCode::Domain, "Poisson mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
      if (p == 0.0) break;
    }
    return k;
  }
  // Hormann's PTRS.
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  while (true) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + kf * log_mean - std::lgamma(kf + 1.0)) {
      return static_cast<std::uint64_t>(kf);
    }
  }
}

DegradationResult degrade(const ImageGrid& u_true, const DegradationConfig& config,
                          const BccbOperator& blur) {
  require_same_grid(u_true.grid(), blur.grid, "degrade");
  if (u_true.min() < 0.0) throw Error(ErrorCode::Domain, "reference image must be >= 0");
  if (!(config.gamma_const > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be > 0");
  if (!std::isfinite(config.target_snr)) {
    throw Error(ErrorCode::InvalidArgument, "target SNR must be finite");
  }

  ImageGrid blurred = blur.apply(u_true);
  for (double& v : blurred.data()) v = std::max(v, 0.0);  // FFT round-off
  double n_u = 0.0;
  for (double v : blurred.data()) n_u += v;
  const double n_bg = config.gamma_const * static_cast<double>(u_true.size());
  if (!(n_u > 0.0)) {
    throw Error(ErrorCode::Calibration, "target SNR unreachable: blurred image has no flux");
  }

  // snr(s) is strictly increasing in s.
  auto snr = [&](double s) { return poisson_snr(s * n_u, n_bg); };
  double lo = 1e-300 / n_u;
  double hi = 1.0;
  int guard = 0;
  while (snr(hi) < config.target_snr) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2000 || !std::isfinite(hi * n_u)) {
      throw Error(ErrorCode::Calibration, "target SNR unreachable: bracket search failed");
    }
  }
  if (snr(lo) > config.target_snr) {
    throw Error(ErrorCode::Calibration, "target SNR unreachable: below the background floor");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (snr(mid) < config.target_snr ? lo : hi) = mid;
  }
  const double scale = 0.5 * (lo + hi);

  DegradationResult out;
  out.scale = scale;
  out.realized_snr = snr(scale);
  out.gamma = ImageGrid(u_true.height(), u_true.width(), config.gamma_const);
  out.b = ImageGrid(u_true.height(), u_true.width());
  for (std::size_t i = 0; i < u_true.size(); ++i) {
    CounterRng rng(config.seed, i);
    const double mean = scale * blurred[i] + out.gamma[i];
    out.b[i] = static_cast<double>(sample_poisson(mean, rng));
  }
  const double peak = out.b.max();
  out.normalization = peak > 0.0 ? peak : 1.0;
  if (peak > 0.0) {
    for (double& v : out.b.data()) v /= peak;
  }
  return out;
}

ImageGrid reference_on_data_scale(const ImageGrid& u_true, const DegradationResult& d) {
  ImageGrid out = u_true;
  const double f = d.scale / d.normalization;
  for (double& v : out.data()) v *= f;
  return out;
}

}  // namespace dtgv
