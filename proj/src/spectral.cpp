#include "dtgv/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace dtgv {
namespace {

constexpr double kImagResidueTol = 1e-10;

void check_residue(double max_imag, double input_norm, const char* what) {
  if (max_imag > kImagResidueTol * input_norm) {
    std::ostringstream msg;
    msg << what << ": imaginary residue " << max_imag << " exceeds tolerance for input norm "
        << input_norm << " (mis-built spectrum?)";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
}

// out = real(ifft(sum_k coeff_k .* X_k)), with the residue guard.
template <std::size_t K>
void combine_inverse(const Fft2& fft, const std::array<const ComplexVector*, K>& coeffs,
                     const std::array<const ComplexVector*, K>& inputs, bool conjugate,
                     std::span<double> out, double input_norm, const char* what) {
  const std::size_t n = fft.grid().size();
  ComplexVector acc(n, Complex(0.0, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = *coeffs[k];
    const auto& x = *inputs[k];
    if (conjugate) {
      for (std::size_t i = 0; i < n; ++i) acc[i] += std::conj(c[i]) * x[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) acc[i] += c[i] * x[i];
    }
  }
  check_residue(fft.inverse_real(acc, out), input_norm, what);
}

ComplexVector transform(const Fft2& fft, std::span<const double> v) {
  ComplexVector out(v.size());
  fft.forward_real(v, out);
  return out;
}

ComplexVector half(const ComplexVector& s) {
  ComplexVector out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = 0.5 * s[i];
  return out;
}

void require_grid(std::size_t height, std::size_t width) {
  if (height < 2 || width < 2) {
    std::ostringstream msg;
    msg << "grid " << height << "x" << width << " too small: both dimensions must be >= 2";
    throw Error(ErrorCode::InvalidGrid, msg.str());
  }
}

}  // namespace

ImageGrid BccbOperator::apply(const ImageGrid& v) const {
  require_same_grid(grid, v.grid(), "BccbOperator::apply");
  const auto fft = Fft2::for_grid(grid);
  const ComplexVector vh = transform(*fft, v.values());
  ImageGrid out(grid.height, grid.width);
  combine_inverse<1>(*fft, {&spectrum}, {&vh}, false, out.values(), norm2(v.values()),
                     "BccbOperator::apply");
  return out;
}

ImageGrid BccbOperator::apply_adjoint(const ImageGrid& v) const {
  require_same_grid(grid, v.grid(), "BccbOperator::apply_adjoint");
  const auto fft = Fft2::for_grid(grid);
  const ComplexVector vh = transform(*fft, v.values());
  ImageGrid out(grid.height, grid.width);
  combine_inverse<1>(*fft, {&spectrum}, {&vh}, true, out.values(), norm2(v.values()),
                     "BccbOperator::apply_adjoint");
  return out;
}

BccbOperator BccbOperator::scaled(double c) const {
  BccbOperator out{grid, spectrum};
  for (auto& s : out.spectrum) s *= c;
  return out;
}

BccbOperator make_operator_from_stencil(const ImageGrid& stencil) {
  const auto fft = Fft2::for_grid(stencil.grid());
  return BccbOperator{stencil.grid(), transform(*fft, stencil.values())};
}

void validate(const DirectionalSpec& spec) {
  if (!(spec.a > 0.0) || !std::isfinite(spec.a)) {
    throw Error(ErrorCode::InvalidArgument, "directional scaling a must be positive");
  }
  if (!std::isfinite(spec.theta)) {
    throw Error(ErrorCode::InvalidArgument, "direction theta must be finite");
  }
}

std::pair<BccbOperator, BccbOperator> make_forward_diff_spectra(std::size_t height,
                                                                std::size_t width) {
  require_grid(height, width);
  // (D u)(p) = sum_q k(q) u(p - q): D_H needs k(0,0) = -1, k(0,-1) = +1.
  ImageGrid kh(height, width);
  kh(0, 0) = -1.0;
  kh(0, width - 1) = 1.0;
  ImageGrid kv(height, width);
  kv(0, 0) = -1.0;
  kv(height - 1, 0) = 1.0;
  return {make_operator_from_stencil(kh), make_operator_from_stencil(kv)};
}

DirectionalOperators make_directional_spectra(const BccbOperator& d_h, const BccbOperator& d_v,
                                              const DirectionalSpec& spec) {
  validate(spec);
  require_same_grid(d_h.grid, d_v.grid, "make_directional_spectra");
  const double c = std::cos(spec.theta);
  const double s = std::sin(spec.theta);
  const std::size_t n = d_h.grid.size();

  // Zero coefficients are skipped so that theta = 0, a = 1 reproduces D_H and
  // D_V bit for bit (adding a signed zero could flip -0.0).
  auto mix = [n](double ch, const ComplexVector& h, double cv, const ComplexVector& v) {
    ComplexVector out(n);
    for (std::size_t i = 0; i < n; ++i) {
      Complex acc(0.0, 0.0);
      bool first = true;
      if (ch != 0.0) {
        acc = ch * h[i];
        first = false;
      }
      if (cv != 0.0) acc = first ? cv * v[i] : acc + cv * v[i];
      out[i] = acc;
    }
    return out;
  };

  DirectionalOperators ops;
  ops.d_theta = BccbOperator{d_h.grid, mix(c, d_h.spectrum, s, d_v.spectrum)};
  ops.d_perp = BccbOperator{d_h.grid, mix(-spec.a * s, d_h.spectrum, spec.a * c, d_v.spectrum)};
  return ops;
}

DirectionalOperators make_tgv_operators(std::size_t height, std::size_t width) {
  auto [d_h, d_v] = make_forward_diff_spectra(height, width);
  return DirectionalOperators{std::move(d_h), std::move(d_v)};
}

DirectionalOperators make_directional_operators(std::size_t height, std::size_t width,
                                                const DirectionalSpec& spec) {
  const auto [d_h, d_v] = make_forward_diff_spectra(height, width);
  return make_directional_spectra(d_h, d_v, spec);
}

BccbOperator make_blur_operator(const PsfKernel& psf, std::size_t height, std::size_t width) {
  if (psf.rows % 2 == 0 || psf.cols % 2 == 0 || psf.weights.size() != psf.rows * psf.cols) {
    throw Error(ErrorCode::InvalidArgument, "PSF must be odd-sized with rows*cols weights");
  }
  if (psf.rows > height || psf.cols > width) {
    std::ostringstream msg;
    msg << "PSF " << psf.rows << "x" << psf.cols << " does not fit grid " << height << "x"
        << width;
    throw Error(ErrorCode::InvalidGrid, msg.str());
  }
  for (double w : psf.weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "PSF weights must be >= 0");
  }
  ImageGrid stencil(height, width);
  const auto h = static_cast<long>(height);
  const auto w = static_cast<long>(width);
  for (int dj = -psf.half_cols(); dj <= psf.half_cols(); ++dj) {
    for (int di = -psf.half_rows(); di <= psf.half_rows(); ++di) {
      const auto r = static_cast<std::size_t>(((di % h) + h) % h);
      const auto c = static_cast<std::size_t>(((dj % w) + w) % w);
      stencil(r, c) += psf.at(di, dj);
    }
  }
  return make_operator_from_stencil(stencil);
}

StackedField2 apply_grad(const ImageGrid& u, const DirectionalOperators& ops) {
  require_same_grid(u.grid(), ops.grid(), "apply_grad");
  const auto fft = Fft2::for_grid(u.grid());
  const ComplexVector uh = transform(*fft, u.values());
  const double nrm = norm2(u.values());
  StackedField2 out(u.grid());
  combine_inverse<1>(*fft, {&ops.d_theta.spectrum}, {&uh}, false, out.block(0), nrm, "apply_grad");
  combine_inverse<1>(*fft, {&ops.d_perp.spectrum}, {&uh}, false, out.block(1), nrm, "apply_grad");
  return out;
}

ImageGrid apply_grad_adjoint(const StackedField2& v, const DirectionalOperators& ops) {
  require_same_grid(v.grid(), ops.grid(), "apply_grad_adjoint");
  const auto fft = Fft2::for_grid(v.grid());
  const ComplexVector v1 = transform(*fft, v.block(0));
  const ComplexVector v2 = transform(*fft, v.block(1));
  ImageGrid out(v.grid().height, v.grid().width);
  combine_inverse<2>(*fft, {&ops.d_theta.spectrum, &ops.d_perp.spectrum}, {&v1, &v2}, true,
                     out.values(), norm2(v.values()), "apply_grad_adjoint");
  return out;
}

StackedField4 apply_sym_derivative(const StackedField2& w, const DirectionalOperators& ops) {
  require_same_grid(w.grid(), ops.grid(), "apply_sym_derivative");
  const auto fft = Fft2::for_grid(w.grid());
  const ComplexVector w1 = transform(*fft, w.block(0));
  const ComplexVector w2 = transform(*fft, w.block(1));
  const ComplexVector half_t = half(ops.d_theta.spectrum);
  const ComplexVector half_p = half(ops.d_perp.spectrum);
  const double nrm = norm2(w.values());
  StackedField4 out(w.grid());
  combine_inverse<1>(*fft, {&ops.d_theta.spectrum}, {&w1}, false, out.block(0), nrm,
                     "apply_sym_derivative");
  combine_inverse<2>(*fft, {&half_p, &half_t}, {&w1, &w2}, false, out.block(1), nrm,
                     "apply_sym_derivative");
  std::copy(out.block(1).begin(), out.block(1).end(), out.block(2).begin());
  combine_inverse<1>(*fft, {&ops.d_perp.spectrum}, {&w2}, false, out.block(3), nrm,
                     "apply_sym_derivative");
  return out;
}

StackedField2 apply_sym_derivative_adjoint(const StackedField4& y,
                                           const DirectionalOperators& ops) {
  require_same_grid(y.grid(), ops.grid(), "apply_sym_derivative_adjoint");
  const auto fft = Fft2::for_grid(y.grid());
  const std::size_t n = y.grid().size();
  std::vector<double> mixed(n);
  for (std::size_t i = 0; i < n; ++i) mixed[i] = y.block(1)[i] + y.block(2)[i];
  const ComplexVector y1 = transform(*fft, y.block(0));
  const ComplexVector y23 = transform(*fft, mixed);
  const ComplexVector y4 = transform(*fft, y.block(3));
  const ComplexVector half_t = half(ops.d_theta.spectrum);
  const ComplexVector half_p = half(ops.d_perp.spectrum);
  const double nrm = norm2(y.values());
  StackedField2 out(y.grid());
  combine_inverse<2>(*fft, {&ops.d_theta.spectrum, &half_p}, {&y1, &y23}, true, out.block(0),
                     nrm, "apply_sym_derivative_adjoint");
  combine_inverse<2>(*fft, {&half_t, &ops.d_perp.spectrum}, {&y23, &y4}, true, out.block(1),
                     nrm, "apply_sym_derivative_adjoint");
  return out;
}

double norm21(std::span<const double> stacked, std::size_t blocks) {
  const std::size_t n = stacked.size() / blocks;
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double sq = 0.0;
    for (std::size_t k = 0; k < blocks; ++k) {
      const double v = stacked[k * n + j];
      sq += v * v;
    }
    total += std::sqrt(sq);
  }
  return total;
}

double norm21_2(const StackedField2& v) { return norm21(v.values(), 2); }
double norm21_4(const StackedField4& y) { return norm21(y.values(), 4); }

}  // namespace dtgv
