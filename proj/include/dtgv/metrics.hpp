#pragma once

#include <string>
#include <vector>

#include "dtgv/image.hpp"

namespace dtgv {

double rmse(const ImageGrid& u, const ImageGrid& u_ref);

/// Improvement in SNR of u_rec over the observation b, in dB. Returns +inf
/// (saturated) when u_rec equals u_ref exactly.
double isnr(const ImageGrid& b, const ImageGrid& u_rec, const ImageGrid& u_ref);

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Local SSIM over every window position fully inside the image.
ImageGrid ssim_map(const ImageGrid& u, const ImageGrid& u_ref, const SsimConfig& config = {});

/// Mean of the SSIM map.
double mssim(const ImageGrid& u, const ImageGrid& u_ref, const SsimConfig& config = {});

struct QualityRecord {
  std::string label;
  double rmse = 0.0;
  double isnr = 0.0;
  double mssim = 0.0;
};

QualityRecord evaluate(const std::string& label, const ImageGrid& b, const ImageGrid& u_rec,
                       const ImageGrid& u_ref);

std::string csv_header(const QualityRecord&);
std::string csv_row(const QualityRecord& q);

/// |u_k - u_ref| for each restoration, all mapped linearly from their joint
/// [min, max] onto [0, 1] so the error images share one scale.
std::vector<ImageGrid> scaled_error_images(const std::vector<ImageGrid>& restorations,
                                           const ImageGrid& u_ref);

}  // namespace dtgv
