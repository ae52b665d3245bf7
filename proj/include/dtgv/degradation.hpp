#pragma once

#include <cstdint>
#include <string>

#include "dtgv/image.hpp"
#include "dtgv/psf.hpp"
#include "dtgv/spectral.hpp"

namespace dtgv {

/// Normalized Gaussian kernel exp(-(i^2 + j^2) / (2 variance)) on a size x size lattice.
PsfKernel gaussian_psf(double variance, std::size_t size);

/// Normalized uniform disk with antialiased rim (8x8 subsamples per pixel).
PsfKernel out_of_focus_psf(double radius, std::size_t size);

/// Smallest odd size holding a disk of the given radius.
std::size_t default_disk_size(double radius);
/// Odd size covering +-3 standard deviations.
std::size_t default_gaussian_size(double variance);

enum class StripeProfile { Constant, Affine };

/// Synthetic directional phantom: parallel stripes of random width and
/// intensity running along direction (cos theta, sin theta) in (column, row)
/// coordinates. Values lie in [0, 1]; output depends only on the arguments.
ImageGrid make_stripe_phantom(std::size_t height, std::size_t width, double theta_true,
                              StripeProfile profile, int num_stripes, std::uint64_t seed);

enum class PsfType { OutOfFocus, Gaussian };

struct PsfChoice {
  PsfType type = PsfType::OutOfFocus;
  double parameter = 5.0;  ///< radius (out-of-focus) or variance (Gaussian)
  std::size_t size = 0;    ///< 0 picks the default for the parameter

  PsfKernel build() const;
  std::string describe() const;
};

struct DegradationConfig {
  PsfChoice psf;
  double target_snr = 43.0;    ///< dB
  double gamma_const = 1e-10;  ///< background per pixel
  std::uint64_t seed = 0;
};

struct DegradationResult {
  ImageGrid b;                 ///< degraded image scaled to max 1
  ImageGrid gamma;             ///< per-pixel background used in the photon model
  double scale = 0.0;          ///< intensity pre-scaling s
  double realized_snr = 0.0;   ///< SNR of the noise-free photon counts, dB
  double normalization = 1.0;  ///< max of the raw Poisson counts
};

/// Poisson SNR of a noise-free photon image: 10 log10(N / sqrt(N + N_bg)).
double poisson_snr(double n_exact, double n_background);

/// Pre-scale, blur, add background, sample Poisson counts, rescale to max 1.
DegradationResult degrade(const ImageGrid& u_true, const DegradationConfig& config,
                          const BccbOperator& blur);

/// u_true expressed in the intensity units of the normalized observation:
/// u_true * scale / normalization. Metrics compare restorations against this.
ImageGrid reference_on_data_scale(const ImageGrid& u_true, const DegradationResult& d);

/// Counter-based uniform stream: draws depend only on (seed, stream, draw index).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Poisson variate: inversion below mean 30, PTRS transformed rejection above.
std::uint64_t sample_poisson(double mean, CounterRng& rng);

}  // namespace dtgv
