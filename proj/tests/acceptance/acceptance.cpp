// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Run with a criterion number to run just that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "dtgv/admm.hpp"
#include "dtgv/degradation.hpp"
#include "dtgv/direction.hpp"
#include "dtgv/metrics.hpp"
#include "dtgv/tuning.hpp"

using namespace dtgv;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Eigen::VectorXd stack_x(const ImageGrid& u, const StackedField2& w) {
  Eigen::VectorXd x(static_cast<long>(3 * u.size()));
  x << oracle::to_eigen(u.values()), oracle::to_eigen(w.values());
  return x;
}

// Shared setting of the restoration criteria.
constexpr double kCrossWeight = 0.3;
constexpr double kPhantomTheta = 0.0;
constexpr int kStripes = 10;
constexpr std::uint64_t kPhantomSeed = 7;
constexpr std::uint64_t kNoiseSeed = 11;

ImageGrid phantom(std::size_t n, double theta = kPhantomTheta * kDeg) {
  return make_stripe_phantom(n, n, theta, StripeProfile::Affine, kStripes, kPhantomSeed);
}

// ---------------------------------------------------------------------------

Verdict spectral_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(101);
  const double thetas[] = {0.0, kPi / 6, kPi / 3};
  const double weights[] = {1.0, 2.0};
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double theta = thetas[i % 3];
    const double a = weights[(i / 3) % 2];
    const PsfKernel psf = oracle::random_psf(i % 2 ? 3 : 5, gen);
    SolverConfig c;
    c.direction = {theta, a};
    const ProblemOperators ops = make_problem_operators(make_blur_operator(psf, 8, 8), c);
    const SpectralFactors f = precompute_factors(ops.blur, ops.diff.d_theta, ops.diff.d_perp);
    const auto v = oracle::random_field<8>(Grid{8, 8}, gen);
    const XSolution x = solve_x_subproblem(v, f, ops);
    const Eigen::MatrixXd h =
        oracle::constraint_matrix(oracle::blur(psf, 8, 8), oracle::directional(8, 8, theta, a));
    const Eigen::VectorXd ref = oracle::least_squares(h, oracle::to_eigen(v.values()));
    worst = std::max(worst, oracle::rel_err(stack_x(x.u, x.w), ref));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-8 && t < 10.0,
          fmt("50 instances, worst relative error %.2e (limit 1e-8), %.2f s", worst, t)};
}

Verdict kl_prox_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(102);
  std::uniform_real_distribution<double> ub(0.0, 10.0), ug(1e-3, 1.0), ud(-2.0, 5.0),
      ul(0.1, 100.0);
  double worst = 0.0;
  int outside = 0;
  for (int i = 0; i < 1000; ++i) {
    const double b = ub(gen), g = ug(gen), d = ud(gen), lam = ul(gen), rho = ul(gen);
    const double z = prox_kl_scalar(d, b, g, lam, rho);
    if (!(z + g > 0.0)) ++outside;
    worst = std::max(worst, std::abs(z - oracle::kl_prox_golden(d, b, g, lam, rho)));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && outside == 0 && t < 5.0,
          fmt("1000 instances, worst |z - z_golden| %.2e (limit 1e-6), %d outside z + gamma > 0, "
              "%.2f s",
              worst, outside, t)};
}

Verdict group_prox_oracle() {
  std::mt19937_64 gen(103);
  std::uniform_real_distribution<double> uc(0.05, 2.0), us(0.0, 1.0);
  double worst = 0.0;
  int nonzero = 0, zero_cases = 0;
  for (int i = 0; i < 1000; ++i) {
    const double c = uc(gen);
    const bool four = i % 2 == 1;
    Eigen::VectorXd d, y;
    // Every fifth draw lands inside the threshold ball.
    const double shrink = i % 5 == 0 ? us(gen) * c : 0.0;
    if (four) {
      auto f = oracle::random_field<4>(Grid{1, 1}, gen);
      if (shrink > 0.0) {
        const double n = norm2(f.values());
        for (double& v : f.values()) v *= shrink / n;
      }
      d = oracle::to_eigen(f.values());
      y = oracle::to_eigen(prox_group4(f, c).values());
    } else {
      auto f = oracle::random_field<2>(Grid{1, 1}, gen);
      if (shrink > 0.0) {
        const double n = norm2(f.values());
        for (double& v : f.values()) v *= shrink / n;
      }
      d = oracle::to_eigen(f.values());
      y = oracle::to_eigen(prox_group2(f, c).values());
    }
    if (d.norm() <= c) {
      ++zero_cases;
      if (y.norm() != 0.0) ++nonzero;
    }
    worst = std::max(worst, (y - oracle::group_prox_newton(d, c)).norm());
  }
  return {worst <= 1e-8 && nonzero == 0,
          fmt("1000 instances (2-D and 4-D), worst error %.2e (limit 1e-8), %d/%d inside-ball "
              "cases not exactly zero",
              worst, nonzero, zero_cases)};
}

Verdict direction_robustness() {
  const auto t0 = Clock::now();
  const std::size_t n = 256;
  auto estimate_deg = [&](const ImageGrid& u, double radius, double snr, std::uint64_t seed) {
    DegradationConfig dc;
    dc.psf = PsfChoice{PsfType::OutOfFocus, radius, 0};
    dc.target_snr = snr;
    dc.seed = seed;
    const auto d = degrade(u, dc, make_blur_operator(dc.psf.build(), n, n));
    return estimate_direction(d.b).theta / kDeg;
  };
  // Angular distance modulo 180 degrees.
  auto off = [](double est, double truth) {
    const double e = std::fmod(std::abs(est - truth), 180.0);
    return std::min(e, 180.0 - e);
  };

  const double truth = 30.0;
  const ImageGrid u30 = make_stripe_phantom(n, n, truth * kDeg, StripeProfile::Affine, kStripes, 41);
  int good = 0;
  std::ostringstream misses;
  std::uint64_t seed = 1000;
  for (double snr : {35.0, 37.0, 39.0, 41.0, 43.0}) {
    for (double radius : {5.0, 7.0, 9.0}) {
      const double est = estimate_deg(u30, radius, snr, ++seed);
      if (off(est, truth) <= 2.0) {
        ++good;
      } else {
        misses << " (" << snr << " dB, r " << radius << ": " << est << ")";
      }
    }
  }
  int exact = 0;
  for (double theta : {0.0, 45.0, 90.0}) {
    const ImageGrid u = make_stripe_phantom(n, n, theta * kDeg, StripeProfile::Affine, kStripes, 42);
    for (double snr : {37.0, 43.0}) {
      const double est = estimate_deg(u, 5.0, snr, ++seed);
      if (off(est, theta) <= 2.0) {
        ++exact;
      } else {
        misses << " (theta " << theta << ", " << snr << " dB: " << est << ")";
      }
    }
  }
  const double t = seconds_since(t0);
  std::string detail = fmt("%d/15 grid cells within 2 deg (need 14), %d/6 rotations recovered, %.1f s",
                           good, exact, t);
  if (!misses.str().empty()) detail += "; misses:" + misses.str();
  return {good >= 14 && exact == 6 && t < 60.0, detail};
}

Verdict admm_convergence() {
  const auto t0 = Clock::now();
  const std::size_t n = 64;
  const ImageGrid u = phantom(n);
  DegradationConfig dc;
  dc.psf = PsfChoice{PsfType::OutOfFocus, 5.0, 0};
  dc.target_snr = 43.0;
  dc.seed = kNoiseSeed;
  const auto blur = make_blur_operator(dc.psf.build(), n, n);
  const auto d = degrade(u, dc, blur);
  const ImageGrid ref = reference_on_data_scale(u, d);

  SolverConfig c;
  c.rho = 10.0;
  c.set_beta(2.0 / 3.0);
  c.tol = 1e-4;
  c.k_max = 500;
  c.direction = {estimate_direction(d.b).theta, kCrossWeight};
  const ProblemOperators ops = make_problem_operators(blur, c);
  const std::vector<double> grid = {1e2, 316.2, 1e3, 3162.0, 1e4};
  const TuningResult tuned = tune_lambda(d.b, ref, c, ops, grid);
  const SolveReport& r = tuned.best_result.report;
  std::ostringstream trials;
  for (const LambdaTrial& tr : tuned.trials) {
    trials << fmt("\n    lambda %g: RMSE %.5f, %d iterations (%s)", tr.lambda, tr.rmse,
                  tr.iterations, to_string(tr.stop_reason));
  }
  const double nres = r.normalized_residual.back();
  const bool stopped = r.stop_reason == StopReason::Tolerance && r.iterations <= 500;
  const bool descent = r.objective.back() <= r.initial_objective;
  const double t = seconds_since(t0);
  return {stopped && nres <= 1e-3 && descent && t < 60.0,
          fmt("smallest-RMSE lambda %g: %s after %d iterations, normalized residual %.2e "
              "(limit 1e-3), objective %.6g -> %.6g, %.1f s",
              tuned.trials[tuned.best].lambda, to_string(r.stop_reason), r.iterations, nres,
              r.initial_objective, r.objective.back(), t) +
              trials.str()};
}

// Tunes lambda for both models on the four (blur, SNR) cells of one phantom
// and counts the cells where DTGV wins on RMSE and MSSIM.
int compare_models(double phantom_theta_deg, std::ostringstream& cells) {
  const std::size_t n = 128;
  const ImageGrid u = phantom(n, phantom_theta_deg * kDeg);
  const std::vector<double> grid = {1e2, 316.2, 1e3, 3162.0, 1e4, 31623.0, 1e5};
  int wins = 0;
  for (const PsfChoice& psf :
       {PsfChoice{PsfType::OutOfFocus, 5.0, 0}, PsfChoice{PsfType::Gaussian, 2.0, 0}}) {
    const auto blur = make_blur_operator(psf.build(), n, n);
    for (double snr : {43.0, 37.0}) {
      DegradationConfig dc;
      dc.psf = psf;
      dc.target_snr = snr;
      dc.seed = kNoiseSeed;
      const auto d = degrade(u, dc, blur);
      const ImageGrid ref = reference_on_data_scale(u, d);
      LambdaTrial best[2];
      for (Regularizer reg : {Regularizer::Dtgv, Regularizer::Tgv}) {
        SolverConfig c;
        c.regularizer = reg;
        c.direction = reg == Regularizer::Dtgv
                          ? DirectionalSpec{estimate_direction(d.b).theta, kCrossWeight}
                          : DirectionalSpec{0.0, 1.0};
        const TuningResult tr = tune_lambda(d.b, ref, c, make_problem_operators(blur, c), grid);
        best[reg == Regularizer::Tgv] = tr.trials[tr.best];
      }
      const bool win = best[0].rmse < best[1].rmse && best[0].mssim >= best[1].mssim;
      wins += win;
      cells << "\n      " << psf.describe() << ", " << snr << " dB: DTGV "
            << fmt("lambda %g RMSE %.5f MSSIM %.4f | TGV lambda %g RMSE %.5f MSSIM %.4f",
                   best[0].lambda, best[0].rmse, best[0].mssim, best[1].lambda, best[1].rmse,
                   best[1].mssim)
            << (win ? "  win" : "  loss");
    }
  }
  return wins;
}

Verdict dtgv_beats_tgv() {
  const auto t0 = Clock::now();
  std::ostringstream cells;
  const int wins = compare_models(kPhantomTheta, cells);
  const double t = seconds_since(t0);
  // Oblique stripes are reported alongside but do not decide the verdict.
  std::ostringstream oblique;
  const int oblique_wins = compare_models(30.0, oblique);
  return {wins >= 3 && t < 900.0,
          fmt("DTGV better in %d/4 cells (need 3) on %g deg stripes, a = %g, %.0f s", wins,
              kPhantomTheta, kCrossWeight, t) +
              cells.str() +
              fmt("\n    for reference, 30 deg stripes: DTGV better in %d/4 cells", oblique_wins) +
              oblique.str()};
}

Verdict tgv_identity() {
  const std::size_t n = 48;
  const ImageGrid u = phantom(n, 0.4);
  const auto blur = make_blur_operator(out_of_focus_psf(3.0, 7), n, n);
  DegradationConfig dc;
  dc.seed = kNoiseSeed;
  const auto d = degrade(u, dc, blur);
  auto trace = [&](Regularizer reg, DirectionalSpec dir) {
    SolverConfig c;
    c.lambda = 1000.0;
    c.k_max = 10;
    c.tol = 1e-15;
    c.regularizer = reg;
    c.direction = dir;
    std::vector<std::vector<double>> it;
    run_admm(d.b, c, make_problem_operators(blur, c), [&](const AdmmState& s) {
      std::vector<double> x = s.u.data();
      x.insert(x.end(), s.w.values().begin(), s.w.values().end());
      it.push_back(std::move(x));
    });
    return it;
  };
  const auto a = trace(Regularizer::Dtgv, {0.0, 1.0});
  const auto b = trace(Regularizer::Tgv, {0.7, 0.2});
  std::size_t same = 0;
  while (same < std::min(a.size(), b.size()) && a[same] == b[same]) ++same;
  return {a.size() == 10 && b.size() == 10 && same == 10,
          fmt("%zu/10 iterates bit-identical (u and w)", same)};
}

Verdict metric_sanity() {
  std::mt19937_64 gen(110);
  std::uniform_real_distribution<double> noise(0.0, 0.3);
  int bad_identity = 0, bad_order = 0;
  for (int i = 0; i < 100; ++i) {
    const ImageGrid ref = oracle::random_image(16, 16, gen, 0.0, 1.0);
    ImageGrid b = ref, u = ref;
    const double sb = noise(gen), su = noise(gen);
    std::normal_distribution<double> nb(0.0, sb), nu(0.0, su);
    for (double& v : b.data()) v += nb(gen);
    for (double& v : u.data()) v += nu(gen);
    if (rmse(u, u) != 0.0 || std::abs(mssim(u, u) - 1.0) > 1e-12 || isnr(b, b, ref) != 0.0) {
      ++bad_identity;
    }
    const double gain = isnr(b, u, ref);
    const bool improved = rmse(u, ref) < rmse(b, ref);
    if ((gain > 0.0) != improved) ++bad_order;
  }
  return {bad_identity == 0 && bad_order == 0,
          fmt("100 triples: %d identity failures, %d ISNR/RMSE disagreements", bad_identity,
              bad_order)};
}

Verdict degradation_calibration() {
  const std::size_t n = 128;
  const ImageGrid u = phantom(n);
  double worst_snr = 0.0;
  for (double target : {37.0, 43.0}) {
    DegradationConfig dc;
    dc.psf = PsfChoice{PsfType::OutOfFocus, 5.0, 0};
    dc.target_snr = target;
    dc.seed = 3;
    const auto d = degrade(u, dc, make_blur_operator(dc.psf.build(), n, n));
    worst_snr = std::max(worst_snr, std::abs(d.realized_snr - target));
  }

  CounterRng rng(2024, 0);
  double mean = 0.0;
  for (int i = 0; i < 10000; ++i) mean += static_cast<double>(sample_poisson(7.0, rng));
  mean /= 10000.0;

  double worst_flux = 0.0;
  for (const PsfKernel& k : {out_of_focus_psf(5.0, default_disk_size(5.0)),
                             gaussian_psf(2.0, default_gaussian_size(2.0))}) {
    const auto blur = make_blur_operator(k, n, n);
    const ImageGrid bu = blur.apply(u);
    double s0 = 0.0, s1 = 0.0;
    for (double v : u.data()) s0 += v;
    for (double v : bu.data()) s1 += v;
    worst_flux = std::max(worst_flux, std::abs(s1 - s0) / s0);
  }
  return {worst_snr <= 0.05 && std::abs(mean - 7.0) <= 0.1 && worst_flux <= 1e-10,
          fmt("SNR error %.2e dB (limit 0.05), Poisson mean %.4f at 7 (limit +-0.1), flux error "
              "%.2e (limit 1e-10)",
              worst_snr, mean, worst_flux)};
}

double seconds_per_iteration(std::size_t h, std::size_t w) {
  const ImageGrid u = make_stripe_phantom(h, w, 0.5, StripeProfile::Affine, kStripes, 5);
  const auto blur = make_blur_operator(out_of_focus_psf(5.0, 11), h, w);
  DegradationConfig dc;
  dc.seed = 5;
  const auto d = degrade(u, dc, blur);
  SolverConfig c;
  c.lambda = 1000.0;
  c.k_max = 15;
  c.tol = 1e-15;
  c.direction = {0.5, kCrossWeight};
  const ProblemOperators ops = make_problem_operators(blur, c);
  std::vector<double> samples;
  for (int rep = 0; rep < 5; ++rep) {
    const auto r = run_admm(d.b, c, ops);
    samples.push_back(r.report.total_seconds / r.report.iterations);
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

Verdict throughput() {
  const double t_256 = seconds_per_iteration(256, 256);
  const double t_half = seconds_per_iteration(256, 512);
  const double t_512 = seconds_per_iteration(512, 512);
  const double doubling = t_512 / t_half;
  const double quadrupling = t_512 / t_256;
  // n log n predicts 2.11 for doubling n from 2^17 and 4.44 for 2^16 -> 2^18.
  return {doubling <= 2.6,
          fmt("per iteration: %.2f ms at 256x256, %.2f ms at 256x512, %.2f ms at 512x512; "
              "n x2 ratio %.2f (limit 2.6), n x4 ratio %.2f (n log n predicts 4.44)",
              1e3 * t_256, 1e3 * t_half, 1e3 * t_512, doubling, quadrupling)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"spectral x-subproblem oracle", spectral_oracle},
      {"KL proximal oracle", kl_prox_oracle},
      {"group shrinkage oracle", group_prox_oracle},
      {"direction estimation robustness", direction_robustness},
      {"ADMM convergence", admm_convergence},
      {"DTGV beats TGV on directional content", dtgv_beats_tgv},
      {"TGV reduction identity", tgv_identity},
      {"metric sanity", metric_sanity},
      {"degradation calibration", degradation_calibration},
      {"per-iteration throughput scaling", throughput},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("[%s] %2zu. %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
