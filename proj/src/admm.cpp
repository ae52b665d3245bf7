#include "dtgv/admm.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace dtgv {

const char* to_string(Regularizer r) noexcept { return r == Regularizer::Tgv ? "TGV" : "DTGV"; }

const char* to_string(StopReason r) noexcept {
  return r == StopReason::Tolerance ? "tolerance" : "max-iterations";
}

void SolverConfig::set_beta(double beta) {
  alpha0 = beta;
  alpha1 = 1.0 - beta;
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be positive");
  if (!(rho > 0.0) || !std::isfinite(rho)) fail("rho must be positive");
  if (!(alpha0 > 0.0 && alpha0 < 1.0)) fail("alpha0 must lie in (0, 1)");
  if (!(alpha1 > 0.0 && alpha1 < 1.0)) fail("alpha1 must lie in (0, 1)");
  if (!(tol > 0.0 && tol < 1.0)) fail("tol must lie in (0, 1)");
  if (k_max < 1) fail("k_max must be positive");
  if (!(gamma > 0.0)) fail("gamma must be positive");
  if (gamma_field) {
    for (double g : gamma_field->data()) {
      if (!(g > 0.0)) fail("gamma entries must be positive");
    }
  }
  if (regularizer == Regularizer::Dtgv) dtgv::validate(direction);
}

ImageGrid SolverConfig::background(const Grid& grid) const {
  if (gamma_field) {
    require_same_grid(gamma_field->grid(), grid, "background");
    return *gamma_field;
  }
  return ImageGrid(grid.height, grid.width, gamma);
}

ProblemOperators make_problem_operators(const BccbOperator& blur, const SolverConfig& config) {
  const auto& g = blur.grid;
  if (config.regularizer == Regularizer::Tgv) {
    return ProblemOperators{blur, make_tgv_operators(g.height, g.width)};
  }
  return ProblemOperators{blur, make_directional_operators(g.height, g.width, config.direction)};
}

// ---------------------------------------------------------------------------
// Spectral factors

namespace {

struct Inverse2 {
  Complex m11, m12, m21, m22;
};

// 2x2 inverse through the Schur complements of both diagonal entries.
Inverse2 invert2(Complex a11, Complex a12, Complex a21, Complex a22) {
  const Complex det = a11 * a22 - a12 * a21;
  if (std::abs(det) < 1e-14 || std::abs(a11) < 1e-14 || std::abs(a22) < 1e-14) {
    std::ostringstream msg;
    msg << "singular 2x2 frequency block (|det| = " << std::abs(det) << ")";
    throw Error(ErrorCode::SingularFactor, msg.str());
  }
  Inverse2 inv;
  inv.m11 = 1.0 / (a11 - a12 * a21 / a22);
  inv.m12 = -inv.m11 * a12 / a22;
  inv.m22 = 1.0 / (a22 - a21 * a12 / a11);
  inv.m21 = -inv.m22 * a21 / a11;
  return inv;
}

using Mat3 = std::array<std::array<Complex, 3>, 3>;

// Verifies forward * inverse = I for one frequency.
void check_frequency(const SpectralFactors& f, std::size_t i) {
  const Complex t = f.sigma_t[i];
  const Complex p = f.sigma_p[i];
  const Complex phi11 = 1.0 + std::norm(t) + 0.5 * std::norm(p);
  const Complex phi12 = 0.5 * std::conj(p) * t;
  const Complex phi22 = 1.0 + 0.5 * std::norm(t) + std::norm(p);
  const Mat3 m = {{{f.gamma[i], -std::conj(t), -std::conj(p)},
                   {-t, phi11, phi12},
                   {-p, std::conj(phi12), phi22}}};
  // inverse = diag(xi^-1, upsilon) * [[1, row1, row2], [col1, 1, 0], [col2, 0, 1]]
  const Mat3 left = {{{f.xi_inv[i], 0.0, 0.0},
                      {0.0, f.ups11[i], f.ups12[i]},
                      {0.0, f.ups21[i], f.ups22[i]}}};
  const Mat3 right = {{{1.0, f.row1[i], f.row2[i]}, {f.col1[i], 1.0, 0.0}, {f.col2[i], 0.0, 1.0}}};
  Mat3 inv{}, prod{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) inv[r][c] += left[r][k] * right[k][c];
  double scale = 0.0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 3; ++k) prod[r][c] += m[r][k] * inv[k][c];
      scale = std::max(scale, std::abs(m[r][c]));
    }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const double err = std::abs(prod[r][c] - (r == c ? 1.0 : 0.0));
      if (err > 1e-8 * std::max(1.0, scale)) {
        std::ostringstream msg;
        msg << "spectral factor check failed at frequency " << i << " (error " << err << ")";
        throw Error(ErrorCode::SingularFactor, msg.str());
      }
    }
}

}  // namespace

SpectralFactors precompute_factors(const BccbOperator& blur, const BccbOperator& d_theta,
                                   const BccbOperator& d_perp) {
  require_same_grid(blur.grid, d_theta.grid, "precompute_factors");
  require_same_grid(blur.grid, d_perp.grid, "precompute_factors");
  const std::size_t n = blur.grid.size();
  SpectralFactors f;
  f.sigma_a = blur.spectrum;
  f.sigma_t = d_theta.spectrum;
  f.sigma_p = d_perp.spectrum;
  for (ComplexVector* v : {&f.gamma, &f.psi11, &f.psi12, &f.psi21, &f.psi22, &f.xi_inv, &f.ups11,
                           &f.ups12, &f.ups21, &f.ups22, &f.row1, &f.row2, &f.col1, &f.col2}) {
    v->resize(n);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Complex a = f.sigma_a[i];
    const Complex t = f.sigma_t[i];
    const Complex p = f.sigma_p[i];
    const double nt = std::norm(t);
    const double np = std::norm(p);
    const Complex gamma = 1.0 + std::norm(a) + nt + np;
    const Complex phi11 = 1.0 + nt + 0.5 * np;
    const Complex phi12 = 0.5 * std::conj(p) * t;
    const Complex phi21 = std::conj(phi12);
    const Complex phi22 = 1.0 + 0.5 * nt + np;

    const Inverse2 psi = invert2(phi11, phi12, phi21, phi22);
    const Complex row1 = std::conj(t) * psi.m11 + std::conj(p) * psi.m21;
    const Complex row2 = std::conj(t) * psi.m12 + std::conj(p) * psi.m22;
    const Complex xi = gamma - (row1 * t + row2 * p);
    if (std::abs(xi) < 1e-14) {
      throw Error(ErrorCode::SingularFactor, "singular Schur complement in the u block");
    }
    const Inverse2 ups = invert2(phi11 - nt / gamma, phi12 - t * std::conj(p) / gamma,
                                 phi21 - p * std::conj(t) / gamma, phi22 - np / gamma);

    f.gamma[i] = gamma;
    f.psi11[i] = psi.m11;
    f.psi12[i] = psi.m12;
    f.psi21[i] = psi.m21;
    f.psi22[i] = psi.m22;
    f.xi_inv[i] = 1.0 / xi;
    f.ups11[i] = ups.m11;
    f.ups12[i] = ups.m12;
    f.ups21[i] = ups.m21;
    f.ups22[i] = ups.m22;
    f.row1[i] = row1;
    f.row2[i] = row2;
    f.col1[i] = t / gamma;
    f.col2[i] = p / gamma;
  }

  // Spot-check the factorization on a spread of frequencies.
  const std::size_t stride = std::max<std::size_t>(1, n / 16);
  for (std::size_t i = 0; i < n; i += stride) check_frequency(f, i);
  check_frequency(f, n - 1);
  return f;
}

// ---------------------------------------------------------------------------
// Spectral workspace shared by the public x-solve and the ADMM loop.

namespace {

class SpectralSolver {
 public:
  SpectralSolver(const ProblemOperators& ops, const SpectralFactors* factors)
      : ops_(ops), factors_(factors), fft_(Fft2::for_grid(ops.grid())), n_(ops.grid().size()) {
    for (auto* v : {&u_hat_, &w1_hat_, &w2_hat_, &tmp_, &acc_}) v->resize(n_);
    scratch_.resize(n_);
  }

  // Spectra of the three blocks of H^T v.
  void adjoint_spectra(const ConstraintField& v) {
    const auto& a = ops_.blur.spectrum;
    const auto& t = ops_.diff.d_theta.spectrum;
    const auto& p = ops_.diff.d_perp.spectrum;
    std::fill(u_hat_.begin(), u_hat_.end(), Complex{});
    std::fill(w1_hat_.begin(), w1_hat_.end(), Complex{});
    std::fill(w2_hat_.begin(), w2_hat_.end(), Complex{});

    forward(v.block(part::kFidelity));
    for (std::size_t i = 0; i < n_; ++i) u_hat_[i] += std::conj(a[i]) * tmp_[i];

    forward(v.block(part::kGrad));
    for (std::size_t i = 0; i < n_; ++i) {
      u_hat_[i] += std::conj(t[i]) * tmp_[i];
      w1_hat_[i] -= tmp_[i];
    }
    forward(v.block(part::kGrad + 1));
    for (std::size_t i = 0; i < n_; ++i) {
      u_hat_[i] += std::conj(p[i]) * tmp_[i];
      w2_hat_[i] -= tmp_[i];
    }

    forward(v.block(part::kSymGrad));
    for (std::size_t i = 0; i < n_; ++i) w1_hat_[i] += std::conj(t[i]) * tmp_[i];
    {
      const auto y2 = v.block(part::kSymGrad + 1);
      const auto y3 = v.block(part::kSymGrad + 2);
      for (std::size_t i = 0; i < n_; ++i) scratch_[i] = y2[i] + y3[i];
    }
    forward(scratch_);
    for (std::size_t i = 0; i < n_; ++i) {
      w1_hat_[i] += 0.5 * std::conj(p[i]) * tmp_[i];
      w2_hat_[i] += 0.5 * std::conj(t[i]) * tmp_[i];
    }
    forward(v.block(part::kSymGrad + 3));
    for (std::size_t i = 0; i < n_; ++i) w2_hat_[i] += std::conj(p[i]) * tmp_[i];

    forward(v.block(part::kPositive));
    for (std::size_t i = 0; i < n_; ++i) u_hat_[i] += tmp_[i];
  }

  // Applies the factored inverse in place: (u_hat, w1_hat, w2_hat) <- M^-1 (...).
  void solve_in_place() {
    const auto& f = *factors_;
    for (std::size_t i = 0; i < n_; ++i) {
      const Complex f1 = u_hat_[i];
      const Complex f2 = w1_hat_[i];
      const Complex f3 = w2_hat_[i];
      const Complex g2 = f2 + f.col1[i] * f1;
      const Complex g3 = f3 + f.col2[i] * f1;
      u_hat_[i] = f.xi_inv[i] * (f1 + f.row1[i] * f2 + f.row2[i] * f3);
      w1_hat_[i] = f.ups11[i] * g2 + f.ups12[i] * g3;
      w2_hat_[i] = f.ups21[i] * g2 + f.ups22[i] * g3;
    }
  }

  void load_u(std::span<const double> u) {
    fft_->forward_real(u, u_hat_);
  }

  // w = grad u, in the frequency domain.
  void set_w_to_grad_u() {
    const auto& t = ops_.diff.d_theta.spectrum;
    const auto& p = ops_.diff.d_perp.spectrum;
    for (std::size_t i = 0; i < n_; ++i) {
      w1_hat_[i] = t[i] * u_hat_[i];
      w2_hat_[i] = p[i] * u_hat_[i];
    }
  }

  void load_w(const StackedField2& w) {
    fft_->forward_real(w.block(0), w1_hat_);
    fft_->forward_real(w.block(1), w2_hat_);
  }

  // Spatial u, w and H x from the current spectra.
  void synthesize(ImageGrid* u, StackedField2* w, ConstraintField* hx) {
    const auto& a = ops_.blur.spectrum;
    const auto& t = ops_.diff.d_theta.spectrum;
    const auto& p = ops_.diff.d_perp.spectrum;
    if (u) fft_->inverse_real(u_hat_, u->values());
    if (w) {
      fft_->inverse_real(w1_hat_, w->block(0));
      fft_->inverse_real(w2_hat_, w->block(1));
    }
    if (!hx) return;
    inverse([&](std::size_t i) { return a[i] * u_hat_[i]; }, hx->block(part::kFidelity));
    inverse([&](std::size_t i) { return t[i] * u_hat_[i] - w1_hat_[i]; }, hx->block(part::kGrad));
    inverse([&](std::size_t i) { return p[i] * u_hat_[i] - w2_hat_[i]; },
            hx->block(part::kGrad + 1));
    inverse([&](std::size_t i) { return t[i] * w1_hat_[i]; }, hx->block(part::kSymGrad));
    inverse([&](std::size_t i) { return 0.5 * (p[i] * w1_hat_[i] + t[i] * w2_hat_[i]); },
            hx->block(part::kSymGrad + 1));
    std::copy(hx->block(part::kSymGrad + 1).begin(), hx->block(part::kSymGrad + 1).end(),
              hx->block(part::kSymGrad + 2).begin());
    inverse([&](std::size_t i) { return p[i] * w2_hat_[i]; }, hx->block(part::kSymGrad + 3));
    if (u) {
      std::copy(u->values().begin(), u->values().end(), hx->block(part::kPositive).begin());
    } else {
      fft_->inverse_real(u_hat_, hx->block(part::kPositive));
    }
  }

  const ComplexVector& u_hat() const { return u_hat_; }
  const ComplexVector& w1_hat() const { return w1_hat_; }
  const ComplexVector& w2_hat() const { return w2_hat_; }

 private:
  void forward(std::span<const double> v) { fft_->forward_real(v, tmp_); }

  template <typename F>
  void inverse(F&& spectrum_at, std::span<double> out) {
    for (std::size_t i = 0; i < n_; ++i) acc_[i] = spectrum_at(i);
    fft_->inverse_real(acc_, out);
  }

  const ProblemOperators& ops_;
  const SpectralFactors* factors_;
  std::shared_ptr<const Fft2> fft_;
  std::size_t n_;
  ComplexVector u_hat_, w1_hat_, w2_hat_, tmp_, acc_;
  std::vector<double> scratch_;
};

void require_operator_grids(const ProblemOperators& ops) {
  require_same_grid(ops.blur.grid, ops.diff.d_theta.grid, "problem operators");
  require_same_grid(ops.blur.grid, ops.diff.d_perp.grid, "problem operators");
}

}  // namespace

ConstraintField apply_h(const ImageGrid& u, const StackedField2& w, const ProblemOperators& ops) {
  require_operator_grids(ops);
  require_same_grid(u.grid(), ops.grid(), "apply_h");
  require_same_grid(w.grid(), ops.grid(), "apply_h");
  SpectralSolver solver(ops, nullptr);
  solver.load_u(u.values());
  solver.load_w(w);
  ConstraintField hx(ops.grid());
  ImageGrid u_copy = u;
  solver.synthesize(&u_copy, nullptr, &hx);
  return hx;
}

StackedField<3> apply_h_adjoint(const ConstraintField& v, const ProblemOperators& ops) {
  require_operator_grids(ops);
  require_same_grid(v.grid(), ops.grid(), "apply_h_adjoint");
  SpectralSolver solver(ops, nullptr);
  solver.adjoint_spectra(v);
  const auto fft = Fft2::for_grid(ops.grid());
  StackedField<3> out(ops.grid());
  fft->inverse_real(solver.u_hat(), out.block(0));
  fft->inverse_real(solver.w1_hat(), out.block(1));
  fft->inverse_real(solver.w2_hat(), out.block(2));
  return out;
}

XSolution solve_x_subproblem(const ConstraintField& v_x, const SpectralFactors& factors,
                             const ProblemOperators& ops) {
  require_operator_grids(ops);
  require_same_grid(v_x.grid(), ops.grid(), "solve_x_subproblem");
  if (factors.size() != ops.grid().size()) {
    throw Error(ErrorCode::ShapeMismatch, "spectral factors were built for another grid");
  }
  SpectralSolver solver(ops, &factors);
  solver.adjoint_spectra(v_x);
  solver.solve_in_place();
  XSolution x{ImageGrid(ops.grid().height, ops.grid().width), StackedField2(ops.grid())};
  solver.synthesize(&x.u, &x.w, nullptr);
  return x;
}

// ---------------------------------------------------------------------------
// Objective pieces and proximal maps

double kl_divergence(std::span<const double> v, std::span<const double> gamma,
                     std::span<const double> b) {
  if (v.size() != gamma.size() || v.size() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "kl_divergence: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = v[i] + gamma[i];
    if (b[i] < 0.0) throw Error(ErrorCode::Domain, "kl_divergence: negative observation");
    if (b[i] > 0.0) {
      if (!(m > 0.0)) {
        std::ostringstream msg;
        msg << "kl_divergence: nonpositive model value " << m << " at pixel " << i;
        throw Error(ErrorCode::Domain, msg.str());
      }
      total += b[i] * std::log(b[i] / m) + m - b[i];
    } else {
      if (m < 0.0) {
        std::ostringstream msg;
        msg << "kl_divergence: negative model value " << m << " at pixel " << i;
        throw Error(ErrorCode::Domain, msg.str());
      }
      total += m;
    }
  }
  return total;
}

double kl_divergence(const ImageGrid& v, const ImageGrid& gamma, const ImageGrid& b) {
  return kl_divergence(v.values(), gamma.values(), b.values());
}

double objective(const ImageGrid& u, const StackedField2& w, const ImageGrid& b,
                 const SolverConfig& config, const ProblemOperators& ops) {
  const ConstraintField hx = apply_h(u, w, ops);
  const ImageGrid gamma = config.background(u.grid());
  return config.lambda * kl_divergence(hx.block(part::kFidelity), gamma.values(), b.values()) +
         config.alpha0 * norm21(hx.values().subspan(part::kGrad * u.size(), 2 * u.size()), 2) +
         config.alpha1 * norm21(hx.values().subspan(part::kSymGrad * u.size(), 4 * u.size()), 4);
}

double prox_kl_scalar(double d, double b, double gamma, double lambda, double rho) {
  // In y = z + gamma the stationarity quadratic reads y^2 + q y - (lambda/rho) b = 0
  // with q = lambda/rho - d - gamma; its larger root is taken in cancellation-free form.
  const double t = lambda / rho;
  const double q = t - d - gamma;
  const double c = t * b;
  double y;
  if (c == 0.0) {
    y = std::max(-q, 0.0);
  } else {
    const double root = std::sqrt(q * q + 4.0 * c);
    y = q >= 0.0 ? 2.0 * c / (q + root) : 0.5 * (root - q);
  }
  return y - gamma;
}

ImageGrid prox_kl(const ImageGrid& d, const ImageGrid& b, const ImageGrid& gamma, double lambda,
                  double rho) {
  require_same_grid(d.grid(), b.grid(), "prox_kl");
  require_same_grid(d.grid(), gamma.grid(), "prox_kl");
  ImageGrid z(d.height(), d.width());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (b[i] < 0.0) throw Error(ErrorCode::Domain, "prox_kl: negative observation");
    if (!(gamma[i] > 0.0)) throw Error(ErrorCode::Domain, "prox_kl: background must be > 0");
    z[i] = prox_kl_scalar(d[i], b[i], gamma[i], lambda, rho);
  }
  return z;
}

void prox_group_inplace(std::span<double> d, std::size_t blocks, double c) {
  const std::size_t n = d.size() / blocks;
  for (std::size_t j = 0; j < n; ++j) {
    double sq = 0.0;
    for (std::size_t k = 0; k < blocks; ++k) sq += d[k * n + j] * d[k * n + j];
    const double nrm = std::sqrt(sq);
    const double factor = nrm > c ? (nrm - c) / nrm : 0.0;
    for (std::size_t k = 0; k < blocks; ++k) d[k * n + j] *= factor;
  }
}

StackedField2 prox_group2(const StackedField2& d, double c) {
  StackedField2 out = d;
  prox_group_inplace(out.values(), 2, c);
  return out;
}

StackedField4 prox_group4(const StackedField4& d, double c) {
  StackedField4 out = d;
  prox_group_inplace(out.values(), 4, c);
  return out;
}

ImageGrid project_nonneg(const ImageGrid& d) {
  ImageGrid out = d;
  for (double& v : out.data()) v = std::max(v, 0.0);
  return out;
}

ConstraintField multiplier_update(const ConstraintField& mu, const ConstraintField& hx,
                                  const ConstraintField& z) {
  require_same_grid(mu.grid(), hx.grid(), "multiplier_update");
  require_same_grid(mu.grid(), z.grid(), "multiplier_update");
  ConstraintField out(mu.grid());
  auto o = out.values();
  auto m = mu.values();
  auto h = hx.values();
  auto zz = z.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = m[i] + h[i] - zz[i];
  return out;
}

ConstraintField multiplier_update(const ConstraintField& mu, const ImageGrid& u,
                                  const StackedField2& w, const ConstraintField& z,
                                  const ProblemOperators& ops) {
  return multiplier_update(mu, apply_h(u, w, ops), z);
}

// ---------------------------------------------------------------------------
// ADMM loop

std::string SolveReport::to_csv() const {
  std::ostringstream s;
  s << "iteration,objective,residual,relative_change,seconds\n" << std::setprecision(10);
  for (std::size_t k = 0; k < objective.size(); ++k) {
    s << (k + 1) << ',' << objective[k] << ',' << residual[k] << ',' << relative_change[k] << ','
      << seconds[k] << '\n';
  }
  return s.str();
}

namespace {

void check_finite(std::span<const double> v, int iteration, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      std::ostringstream msg;
      msg << "ADMM diverged: non-finite " << what << " at iteration " << iteration;
      throw Error(ErrorCode::Divergence, msg.str());
    }
  }
}

struct ObjectiveValue {
  double value;
  bool at_z1;
};

// Falls back to z1 (always > -gamma) when A u + gamma leaves the log domain.
ObjectiveValue evaluate_objective(const ConstraintField& hx, const ConstraintField& z,
                                  const ImageGrid& gamma, const ImageGrid& b,
                                  const SolverConfig& config) {
  const std::size_t n = b.size();
  auto fidelity = hx.block(part::kFidelity);
  bool in_domain = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = fidelity[i] + gamma[i];
    if (b[i] > 0.0 ? !(m > 0.0) : m < 0.0) {
      in_domain = false;
      break;
    }
  }
  const auto kl_source = in_domain ? fidelity : z.block(part::kFidelity);
  const double value =
      config.lambda * kl_divergence(kl_source, gamma.values(), b.values()) +
      config.alpha0 * norm21(hx.values().subspan(part::kGrad * n, 2 * n), 2) +
      config.alpha1 * norm21(hx.values().subspan(part::kSymGrad * n, 4 * n), 4);
  return {value, !in_domain};
}

}  // namespace

AdmmResult run_admm(const ImageGrid& b, const SolverConfig& config, const ProblemOperators& ops,
                    const IterationObserver& observer) {
  config.validate();
  require_operator_grids(ops);
  require_same_grid(b.grid(), ops.grid(), "run_admm");
  for (double v : b.data()) {
    if (!(v >= 0.0)) throw Error(ErrorCode::Domain, "run_admm: observation must be >= 0");
  }

  const Grid grid = b.grid();
  const std::size_t n = grid.size();
  const ImageGrid gamma = config.background(grid);
  const SpectralFactors factors =
      precompute_factors(ops.blur, ops.diff.d_theta, ops.diff.d_perp);
  SpectralSolver solver(ops, &factors);

  // x^0 = (b, grad b); z^0 = 0, mu^0 = 0; x^1 = x^0.
  AdmmState state{b, StackedField2(grid), ConstraintField(grid), ConstraintField(grid), 0};
  ConstraintField hx(grid);
  solver.load_u(b.values());
  solver.set_w_to_grad_u();
  solver.synthesize(nullptr, &state.w, &hx);
  std::copy(b.values().begin(), b.values().end(), hx.block(part::kPositive).begin());

  SolveReport report;
  report.initial_objective = evaluate_objective(hx, state.z, gamma, b, config).value;

  const double c2 = config.alpha0 / config.rho;
  const double c3 = config.alpha1 / config.rho;
  ConstraintField v(grid);
  ImageGrid u_next(grid.height, grid.width);
  const auto start = std::chrono::steady_clock::now();

  while (state.iteration < config.k_max) {
    const int k = state.iteration + 1;

    // z-update on v_z = H x + mu.
    {
      auto vz = v.values();
      auto h = hx.values();
      auto m = state.mu.values();
      for (std::size_t i = 0; i < vz.size(); ++i) vz[i] = h[i] + m[i];
      auto z = state.z.values();
      auto d1 = v.block(part::kFidelity);
      auto z1 = state.z.block(part::kFidelity);
      for (std::size_t i = 0; i < n; ++i) {
        z1[i] = prox_kl_scalar(d1[i], b[i], gamma[i], config.lambda, config.rho);
      }
      std::copy(vz.begin() + static_cast<std::ptrdiff_t>(part::kGrad * n), vz.end(),
                z.begin() + static_cast<std::ptrdiff_t>(part::kGrad * n));
      prox_group_inplace(z.subspan(part::kGrad * n, 2 * n), 2, c2);
      prox_group_inplace(z.subspan(part::kSymGrad * n, 4 * n), 4, c3);
      for (double& zi : state.z.block(part::kPositive)) zi = std::max(zi, 0.0);
    }

    // mu-update and the primal residual H x^k - z^k.
    {
      auto m = state.mu.values();
      auto h = hx.values();
      auto z = state.z.values();
      double res = 0.0, hn = 0.0, zn = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double r = h[i] - z[i];
        m[i] += r;
        res += r * r;
        hn += h[i] * h[i];
        zn += z[i] * z[i];
      }
      res = std::sqrt(res);
      const double denom = std::max(std::sqrt(hn), std::sqrt(zn));
      report.residual.push_back(res);
      report.normalized_residual.push_back(denom > 0.0 ? res / denom : 0.0);
    }

    // x-update on v_x = z - mu.
    {
      auto vx = v.values();
      auto z = state.z.values();
      auto m = state.mu.values();
      for (std::size_t i = 0; i < vx.size(); ++i) vx[i] = z[i] - m[i];
    }
    solver.adjoint_spectra(v);
    solver.solve_in_place();
    solver.synthesize(&u_next, &state.w, &hx);
    check_finite(u_next.values(), k, "image");
    check_finite(state.w.values(), k, "auxiliary field");

    const double change = distance2(u_next.values(), state.u.values());
    const double base = norm2(state.u.values());
    std::swap(state.u, u_next);
    state.iteration = k;

    const auto obj = evaluate_objective(hx, state.z, gamma, b, config);
    report.objective.push_back(obj.value);
    report.kl_at_z1.push_back(obj.at_z1);
    report.relative_change.push_back(base > 0.0 ? change / base
                                                : std::numeric_limits<double>::infinity());
    report.seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (observer) observer(state);

    if (change < config.tol * base) {
      report.stop_reason = StopReason::Tolerance;
      break;
    }
  }

  report.iterations = state.iteration;
  report.total_seconds = report.seconds.empty() ? 0.0 : report.seconds.back();
  report.max_negativity = std::max(0.0, -state.u.min());
  return AdmmResult{std::move(state.u), std::move(state.w), std::move(report)};
}

}  // namespace dtgv
