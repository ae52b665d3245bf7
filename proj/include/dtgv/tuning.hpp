#pragma once

#include <span>
#include <vector>

#include "dtgv/admm.hpp"

namespace dtgv {

struct LambdaTrial {
  double lambda = 0.0;
  double rmse = 0.0;
  double isnr = 0.0;
  double mssim = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  StopReason stop_reason = StopReason::MaxIterations;
};

struct TuningResult {
  std::vector<LambdaTrial> trials;
  std::size_t best = 0;  ///< index of the smallest-RMSE trial
  AdmmResult best_result;
};

/// Trial-and-error selection of lambda: one solve per grid value, keeping the
/// restoration closest to the reference in RMSE. Ties keep the earlier value.
TuningResult tune_lambda(const ImageGrid& b, const ImageGrid& reference, const SolverConfig& base,
                         const ProblemOperators& ops, std::span<const double> lambdas);

}  // namespace dtgv
