#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dtgv/fft.hpp"
#include "dtgv/image.hpp"
#include "dtgv/spectral.hpp"

namespace dtgv {

enum class Regularizer { Dtgv, Tgv };

const char* to_string(Regularizer r) noexcept;

struct SolverConfig {
  double lambda = 1.0;
  double alpha0 = 2.0 / 3.0;
  double alpha1 = 1.0 / 3.0;
  double rho = 10.0;
  DirectionalSpec direction;
  double tol = 1e-4;
  int k_max = 500;
  /// Background: constant unless a per-pixel field is supplied.
  double gamma = 1e-10;
  std::optional<ImageGrid> gamma_field;
  /// Tgv ignores `direction` and uses the plain D_H / D_V pair.
  Regularizer regularizer = Regularizer::Dtgv;

  /// alpha0 = beta, alpha1 = 1 - beta.
  void set_beta(double beta);
  void validate() const;
  ImageGrid background(const Grid& grid) const;
};

/// Blur plus the difference pair the regularizer is built on.
struct ProblemOperators {
  BccbOperator blur;
  DirectionalOperators diff;

  const Grid& grid() const noexcept { return blur.grid; }
};

ProblemOperators make_problem_operators(const BccbOperator& blur, const SolverConfig& config);

/// Stacked 8n vector laid out as (z1 | z2 (2 blocks) | z3 (4 blocks) | z4).
using ConstraintField = StackedField<8>;

namespace part {
inline constexpr std::size_t kFidelity = 0;
inline constexpr std::size_t kGrad = 1;     // two blocks
inline constexpr std::size_t kSymGrad = 3;  // four blocks
inline constexpr std::size_t kPositive = 7;
}  // namespace part

/// Per-frequency factors of the normal-equation matrix of the x-subproblem.
///
/// Each vector holds one diagonal (length n). The 3x3 block system
///   [ gamma     -conj(t)  -conj(p) ]
///   [ -t         phi11     phi12   ]
///   [ -p         phi21     phi22   ]
/// is inverted through its Schur complements: xi = gamma - D* psi D with
/// psi = phi^-1, and upsilon = (phi - D gamma^-1 D*)^-1.
struct SpectralFactors {
  ComplexVector sigma_a, sigma_t, sigma_p;
  ComplexVector gamma;
  ComplexVector psi11, psi12, psi21, psi22;
  ComplexVector xi_inv;
  ComplexVector ups11, ups12, ups21, ups22;
  // Cached products used by the solve: row = D* psi, col = D / gamma.
  ComplexVector row1, row2, col1, col2;

  std::size_t size() const noexcept { return gamma.size(); }
};

SpectralFactors precompute_factors(const BccbOperator& blur, const BccbOperator& d_theta,
                                   const BccbOperator& d_perp);

/// Applies H: (Au, grad u - w, E w, u).
ConstraintField apply_h(const ImageGrid& u, const StackedField2& w, const ProblemOperators& ops);

/// Applies H^T to an 8n vector; returns the (u, w1, w2) blocks.
StackedField<3> apply_h_adjoint(const ConstraintField& v, const ProblemOperators& ops);

struct XSolution {
  ImageGrid u;
  StackedField2 w;
};

/// argmin_x ||H x - v_x||^2 through the factored spectral normal equations.
XSolution solve_x_subproblem(const ConstraintField& v_x, const SpectralFactors& factors,
                             const ProblemOperators& ops);

/// Generalized KL divergence sum_i b ln(b/(v+gamma)) + v + gamma - b, with the
/// log term dropped where b = 0.
double kl_divergence(std::span<const double> v, std::span<const double> gamma,
                     std::span<const double> b);
double kl_divergence(const ImageGrid& v, const ImageGrid& gamma, const ImageGrid& b);

double objective(const ImageGrid& u, const StackedField2& w, const ImageGrid& b,
                 const SolverConfig& config, const ProblemOperators& ops);

/// Scalar KL proximal step: the larger root of the stationarity quadratic.
double prox_kl_scalar(double d, double b, double gamma, double lambda, double rho);
ImageGrid prox_kl(const ImageGrid& d, const ImageGrid& b, const ImageGrid& gamma, double lambda,
                  double rho);

/// Block soft thresholding: every pixel's vector is scaled by max(1 - c/|d|, 0).
void prox_group_inplace(std::span<double> d, std::size_t blocks, double c);
StackedField2 prox_group2(const StackedField2& d, double c);
StackedField4 prox_group4(const StackedField4& d, double c);

ImageGrid project_nonneg(const ImageGrid& d);

/// mu + H x - z.
ConstraintField multiplier_update(const ConstraintField& mu, const ConstraintField& hx,
                                  const ConstraintField& z);
ConstraintField multiplier_update(const ConstraintField& mu, const ImageGrid& u,
                                  const StackedField2& w, const ConstraintField& z,
                                  const ProblemOperators& ops);

struct AdmmState {
  ImageGrid u;
  StackedField2 w;
  ConstraintField z;
  ConstraintField mu;
  int iteration = 0;
};

enum class StopReason { Tolerance, MaxIterations };
const char* to_string(StopReason r) noexcept;

struct SolveReport {
  std::vector<double> objective;
  std::vector<double> residual;             ///< ||H x^k - z^k||
  std::vector<double> normalized_residual;  ///< residual / max(||H x^k||, ||z^k||)
  std::vector<double> relative_change;      ///< ||u^{k+1} - u^k|| / ||u^k||
  std::vector<double> seconds;              ///< cumulative loop wall time
  std::vector<bool> kl_at_z1;               ///< fidelity evaluated at z1 instead of Au
  double initial_objective = 0.0;
  int iterations = 0;
  StopReason stop_reason = StopReason::MaxIterations;
  double total_seconds = 0.0;
  double max_negativity = 0.0;  ///< max(0, -min u) of the returned image

  std::string to_csv() const;
};

/// Called after every iteration with the current state; used for RMSE traces.
using IterationObserver = std::function<void(const AdmmState&)>;

struct AdmmResult {
  ImageGrid u;
  StackedField2 w;
  SolveReport report;
};

AdmmResult run_admm(const ImageGrid& b, const SolverConfig& config, const ProblemOperators& ops,
                    const IterationObserver& observer = {});

}  // namespace dtgv
