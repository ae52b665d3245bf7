#pragma once

#include <memory>
#include <utility>

#include "dtgv/fft.hpp"
#include "dtgv/image.hpp"
#include "dtgv/psf.hpp"

namespace dtgv {

/// Periodic (block circulant with circulant blocks) convolution operator,
/// stored as the unnormalized 2-D DFT of its stencil. Index 0 is the zero
/// frequency.
struct BccbOperator {
  Grid grid;
  ComplexVector spectrum;

  ImageGrid apply(const ImageGrid& v) const;
  ImageGrid apply_adjoint(const ImageGrid& v) const;

  /// Operator with spectrum c * spectrum.
  BccbOperator scaled(double c) const;
};

/// Stencil (kernel centred at pixel (0,0), wrapped) -> operator.
BccbOperator make_operator_from_stencil(const ImageGrid& stencil);

struct DirectionalSpec {
  double theta = 0.0;  ///< stripe direction, radians
  double a = 1.0;      ///< weight of the cross-direction difference, > 0
};

void validate(const DirectionalSpec& spec);

/// Directional difference pair: D_theta along the texture direction and
/// D_perp = a * (difference along theta + pi/2).
struct DirectionalOperators {
  BccbOperator d_theta;
  BccbOperator d_perp;

  const Grid& grid() const noexcept { return d_theta.grid; }
};

/// Periodic forward differences: (D_H u)(r,c) = u(r, c+1) - u(r,c) and
/// (D_V u)(r,c) = u(r+1, c) - u(r,c), indices mod the grid.
std::pair<BccbOperator, BccbOperator> make_forward_diff_spectra(std::size_t height,
                                                                std::size_t width);

DirectionalOperators make_directional_spectra(const BccbOperator& d_h,
                                              const BccbOperator& d_v,
                                              const DirectionalSpec& spec);

/// Plain D_H / D_V pair, i.e. the TGV operators, built without any rotation.
DirectionalOperators make_tgv_operators(std::size_t height, std::size_t width);

DirectionalOperators make_directional_operators(std::size_t height, std::size_t width,
                                                const DirectionalSpec& spec);

/// PSF embedded at the origin with circular wrap.
BccbOperator make_blur_operator(const PsfKernel& psf, std::size_t height, std::size_t width);

StackedField2 apply_grad(const ImageGrid& u, const DirectionalOperators& ops);
ImageGrid apply_grad_adjoint(const StackedField2& v, const DirectionalOperators& ops);

/// Symmetrized derivative: (D_t w1, (D_p w1 + D_t w2)/2 twice, D_p w2).
StackedField4 apply_sym_derivative(const StackedField2& w, const DirectionalOperators& ops);
StackedField2 apply_sym_derivative_adjoint(const StackedField4& y,
                                           const DirectionalOperators& ops);

/// Sum over pixels of the Euclidean norm of the per-pixel block vector.
double norm21(std::span<const double> stacked, std::size_t blocks);
double norm21_2(const StackedField2& v);
double norm21_4(const StackedField4& y);

}  // namespace dtgv
