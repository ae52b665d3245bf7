#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "../oracles.hpp"
#include "dtgv/degradation.hpp"
#include "dtgv/spectral.hpp"

using namespace dtgv;

namespace {

double rel(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) { return oracle::rel_err(x, ref); }

Eigen::VectorXd stack(std::span<const double> s) { return oracle::to_eigen(s); }

}  // namespace

TEST_CASE("forward differences of a constant vanish") {
  const auto [dh, dv] = make_forward_diff_spectra(5, 7);
  const ImageGrid u(5, 7, 5.0);
  const ImageGrid gh = dh.apply(u);
  const ImageGrid gv = dv.apply(u);
  for (double v : gh.data()) CHECK(std::abs(v) < 1e-14);
  for (double v : gv.data()) CHECK(std::abs(v) < 1e-14);
  CHECK(std::abs(dh.spectrum[0]) == 0.0);
  CHECK(std::abs(dv.spectrum[0]) == 0.0);
}

TEST_CASE("forward differences on a 2x2 image follow the periodic stencil") {
  ImageGrid u(2, 2);
  u(0, 0) = 1;
  u(0, 1) = 2;
  u(1, 0) = 3;
  u(1, 1) = 4;
  const auto [dh, dv] = make_forward_diff_spectra(2, 2);
  const ImageGrid h = dh.apply(u);
  const ImageGrid v = dv.apply(u);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(h(r, c) == doctest::Approx(u(r, (c + 1) % 2) - u(r, c)).epsilon(1e-14));
      CHECK(v(r, c) == doctest::Approx(u((r + 1) % 2, c) - u(r, c)).epsilon(1e-14));
    }
  }
}

TEST_CASE("forward differences reject degenerate grids") {
  CHECK_THROWS_AS(make_forward_diff_spectra(1, 5), Error);
  try {
    make_forward_diff_spectra(4, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidGrid);
  }
}

TEST_CASE("theta = 0 and a = 1 reproduce D_H and D_V bit for bit") {
  const auto [dh, dv] = make_forward_diff_spectra(6, 9);
  const auto ops = make_directional_spectra(dh, dv, {0.0, 1.0});
  CHECK(ops.d_theta.spectrum == dh.spectrum);
  CHECK(ops.d_perp.spectrum == dv.spectrum);
  const auto tgv = make_tgv_operators(6, 9);
  CHECK(tgv.d_theta.spectrum == ops.d_theta.spectrum);
  CHECK(tgv.d_perp.spectrum == ops.d_perp.spectrum);
}

TEST_CASE("theta = pi/2 swaps the pair") {
  const auto [dh, dv] = make_forward_diff_spectra(6, 6);
  const auto ops = make_directional_spectra(dh, dv, {std::numbers::pi / 2, 1.0});
  for (std::size_t i = 0; i < dh.spectrum.size(); ++i) {
    CHECK(std::abs(ops.d_theta.spectrum[i] - dv.spectrum[i]) < 1e-15);
    CHECK(std::abs(ops.d_perp.spectrum[i] + dh.spectrum[i]) < 1e-15);
  }
}

TEST_CASE("directional spec validation") {
  CHECK_THROWS_AS(make_directional_operators(8, 8, {0.3, 0.0}), Error);
  CHECK_THROWS_AS(make_directional_operators(8, 8, {0.3, -1.0}), Error);
  CHECK_NOTHROW(make_directional_operators(8, 8, {-std::numbers::pi, 2.0}));
}

TEST_CASE("directional operators match dense matrices") {
  std::mt19937_64 gen(1);
  const std::size_t h = 8, w = 8;
  for (const auto& [theta, a] : {std::pair{std::numbers::pi / 4, 2.0},
                                 std::pair{std::numbers::pi / 6, 1.0},
                                 std::pair{-1.1, 0.3}}) {
    const auto ops = make_directional_operators(h, w, {theta, a});
    const auto dense = oracle::directional(h, w, theta, a);
    const ImageGrid u = oracle::random_image(h, w, gen);
    const Eigen::VectorXd ue = stack(u.values());

    CHECK(rel(stack(ops.d_theta.apply(u).values()), dense.d_theta * ue) < 1e-10);
    CHECK(rel(stack(ops.d_perp.apply(u).values()), dense.d_perp * ue) < 1e-10);

    const StackedField2 g = apply_grad(u, ops);
    CHECK(rel(stack(g.values()), oracle::grad(dense) * ue) < 1e-10);

    const auto wf = oracle::random_field<2>(u.grid(), gen);
    const StackedField4 e = apply_sym_derivative(wf, ops);
    CHECK(rel(stack(e.values()), oracle::sym_derivative(dense) * stack(wf.values())) < 1e-10);

    const ImageGrid gt = apply_grad_adjoint(wf, ops);
    CHECK(rel(stack(gt.values()), oracle::grad(dense).transpose() * stack(wf.values())) < 1e-10);

    const auto y = oracle::random_field<4>(u.grid(), gen);
    const StackedField2 et = apply_sym_derivative_adjoint(y, ops);
    CHECK(rel(stack(et.values()), oracle::sym_derivative(dense).transpose() * stack(y.values())) <
          1e-10);
  }
}

TEST_CASE("adjoint identities over random draws") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> scale(0.2, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = 3 + trial % 6, w = 4 + (trial * 7) % 9;
    const auto ops = make_directional_operators(h, w, {angle(gen), scale(gen)});
    const ImageGrid u = oracle::random_image(h, w, gen);
    const auto v = oracle::random_field<2>(u.grid(), gen);
    const auto y = oracle::random_field<4>(u.grid(), gen);

    const double lhs1 = dot(apply_grad(u, ops).values(), v.values());
    const double rhs1 = dot(u.values(), apply_grad_adjoint(v, ops).values());
    CHECK(std::abs(lhs1 - rhs1) <= 1e-10 * std::max(1.0, std::abs(lhs1)));

    const double lhs2 = dot(apply_sym_derivative(v, ops).values(), y.values());
    const double rhs2 = dot(v.values(), apply_sym_derivative_adjoint(y, ops).values());
    CHECK(std::abs(lhs2 - rhs2) <= 1e-10 * std::max(1.0, std::abs(lhs2)));

    const auto psf = oracle::random_psf(3, gen);
    const auto blur = make_blur_operator(psf, h, w);
    const ImageGrid x = oracle::random_image(h, w, gen);
    const double lhs3 = dot(blur.apply(u).values(), x.values());
    const double rhs3 = dot(u.values(), blur.apply_adjoint(x).values());
    CHECK(std::abs(lhs3 - rhs3) <= 1e-10 * std::max(1.0, std::abs(lhs3)));
  }
}

TEST_CASE("symmetrized derivative duplicates its mixed block") {
  std::mt19937_64 gen(3);
  const auto ops = make_directional_operators(7, 5, {0.7, 1.5});
  const auto wf = oracle::random_field<2>(Grid{7, 5}, gen);
  const StackedField4 e = apply_sym_derivative(wf, ops);
  for (std::size_t i = 0; i < 35; ++i) CHECK(e.block(1)[i] == e.block(2)[i]);
}

TEST_CASE("constants lie in the null space of the directional gradient") {
  const auto ops = make_directional_operators(9, 6, {1.2, 0.4});
  CHECK(std::abs(ops.d_theta.spectrum[0]) == 0.0);
  CHECK(std::abs(ops.d_perp.spectrum[0]) == 0.0);
  const StackedField2 g = apply_grad(ImageGrid(9, 6, 3.5), ops);
  for (double v : g.values()) CHECK(std::abs(v) < 1e-13);
}

TEST_CASE("mixed (2,1) norms") {
  StackedField2 zero(Grid{2, 1});
  CHECK(norm21_2(zero) == 0.0);

  StackedField2 v(Grid{2, 1});
  v.block(0)[0] = 3.0;
  v.block(1)[0] = 4.0;
  CHECK(norm21_2(v) == doctest::Approx(5.0).epsilon(1e-15));

  std::mt19937_64 gen(4);
  for (int t = 0; t < 50; ++t) {
    const auto a = oracle::random_field<4>(Grid{4, 3}, gen);
    const auto b = oracle::random_field<4>(Grid{4, 3}, gen);
    StackedField4 s(Grid{4, 3}), scaled(Grid{4, 3});
    for (std::size_t i = 0; i < s.values().size(); ++i) {
      s.values()[i] = a.values()[i] + b.values()[i];
      scaled.values()[i] = -2.5 * a.values()[i];
    }
    CHECK(norm21_4(a) >= 0.0);
    CHECK(norm21_4(scaled) == doctest::Approx(2.5 * norm21_4(a)).epsilon(1e-12));
    CHECK(norm21_4(s) <= norm21_4(a) + norm21_4(b) + 1e-12);
  }
}

TEST_CASE("blur operator construction") {
  const auto id = make_blur_operator(PsfKernel::delta(), 6, 5);
  for (const auto& s : id.spectrum) CHECK(std::abs(s - Complex(1.0, 0.0)) < 1e-15);

  const auto disk = make_blur_operator(out_of_focus_psf(2.0, 5), 16, 16);
  CHECK(std::abs(disk.spectrum[0] - Complex(1.0, 0.0)) < 1e-12);
  const ImageGrid flat = disk.apply(ImageGrid(16, 16, 1.0));
  for (double v : flat.data()) CHECK(v == doctest::Approx(1.0));

  CHECK_THROWS_AS(make_blur_operator(out_of_focus_psf(3.0, 7), 5, 5), Error);
  PsfKernel neg = PsfKernel::delta();
  neg.weights[0] = -1.0;
  CHECK_THROWS_AS(make_blur_operator(neg, 5, 5), Error);
}

TEST_CASE("blur matches a direct circular convolution loop") {
  std::mt19937_64 gen(5);
  PsfKernel avg;
  avg.rows = avg.cols = 3;
  avg.weights.assign(9, 1.0 / 9.0);
  const ImageGrid u = oracle::random_image(6, 6, gen);
  const ImageGrid out = make_blur_operator(avg, 6, 6).apply(u);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      double s = 0.0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
          s += u(oracle::wrap(static_cast<long>(r) + di, 6), oracle::wrap(static_cast<long>(c) + dj, 6));
      CHECK(out(r, c) == doctest::Approx(s / 9.0).epsilon(1e-12));
    }
  }

  // An asymmetric kernel pins down convolution versus correlation.
  const auto psf = oracle::random_psf(3, gen);
  const ImageGrid v = oracle::random_image(5, 7, gen);
  CHECK(rel(stack(make_blur_operator(psf, 5, 7).apply(v).values()),
            oracle::blur(psf, 5, 7) * stack(v.values())) < 1e-10);
}

TEST_CASE("spectral application equals the dense matrix on small grids") {
  std::mt19937_64 gen(6);
  for (std::size_t h = 2; h <= 8; h += 3) {
    for (std::size_t w = 3; w <= 8; w += 5) {
      const auto psf = oracle::random_psf(h >= 3 ? 3 : 1, gen);
      const auto op = make_blur_operator(psf, h, w);
      const ImageGrid u = oracle::random_image(h, w, gen);
      const Eigen::MatrixXd dense = oracle::blur(psf, h, w);
      CHECK(rel(stack(op.apply(u).values()), dense * stack(u.values())) < 1e-10);
      CHECK(rel(stack(op.apply_adjoint(u).values()), dense.transpose() * stack(u.values())) < 1e-10);
    }
  }
}
