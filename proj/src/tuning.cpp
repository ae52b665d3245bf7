#include "dtgv/tuning.hpp"

#include "dtgv/metrics.hpp"

namespace dtgv {

TuningResult tune_lambda(const ImageGrid& b, const ImageGrid& reference, const SolverConfig& base,
                         const ProblemOperators& ops, std::span<const double> lambdas) {
  if (lambdas.empty()) throw Error(ErrorCode::InvalidArgument, "lambda grid is empty");
  require_same_grid(b.grid(), reference.grid(), "tune_lambda");
  TuningResult out;
  for (double lambda : lambdas) {
    SolverConfig config = base;
    config.lambda = lambda;
    AdmmResult res = run_admm(b, config, ops);
    LambdaTrial t;
    t.lambda = lambda;
    t.rmse = rmse(res.u, reference);
    t.isnr = isnr(b, res.u, reference);
    t.mssim = mssim(res.u, reference);
    t.iterations = res.report.iterations;
    t.seconds = res.report.total_seconds;
    t.stop_reason = res.report.stop_reason;
    out.trials.push_back(t);
    if (out.trials.size() == 1 || t.rmse < out.trials[out.best].rmse) {
      out.best = out.trials.size() - 1;
      out.best_result = std::move(res);
    }
  }
  return out;
}

}  // namespace dtgv
