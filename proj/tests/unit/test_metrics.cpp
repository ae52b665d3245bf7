#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "../oracles.hpp"
#include "dtgv/degradation.hpp"
#include "dtgv/metrics.hpp"

using namespace dtgv;

TEST_CASE("RMSE") {
  std::mt19937_64 gen(30);
  const ImageGrid u = oracle::random_image(5, 6, gen);
  CHECK(rmse(u, u) == 0.0);
  const ImageGrid a(2, 2, 1.0), b(2, 2, 0.0);
  CHECK(rmse(a, b) == 1.0);
  for (int t = 0; t < 100; ++t) {
    const ImageGrid x = oracle::random_image(4, 4, gen);
    const ImageGrid y = oracle::random_image(4, 4, gen);
    const ImageGrid z = oracle::random_image(4, 4, gen);
    CHECK(rmse(x, y) >= 0.0);
    CHECK(rmse(x, y) == rmse(y, x));
    CHECK(rmse(x, z) <= rmse(x, y) + rmse(y, z) + 1e-15);
    ImageGrid xs = x, ys = y;
    for (double& v : xs.data()) v *= -3.0;
    for (double& v : ys.data()) v *= -3.0;
    CHECK(rmse(xs, ys) == doctest::Approx(3.0 * rmse(x, y)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(rmse(ImageGrid(2, 3), ImageGrid(3, 2)), Error);
}

TEST_CASE("ISNR") {
  std::mt19937_64 gen(31);
  const ImageGrid ref = oracle::random_image(6, 6, gen);
  const ImageGrid b = oracle::random_image(6, 6, gen);
  CHECK(isnr(b, b, ref) == 0.0);
  CHECK(std::isinf(isnr(b, ref, ref)));
  CHECK(isnr(b, ref, ref) > 0.0);

  ImageGrid closer = ref;
  for (std::size_t i = 0; i < ref.size(); ++i) closer[i] = ref[i] + 0.1 * (b[i] - ref[i]);
  CHECK(isnr(b, closer, ref) == doctest::Approx(20.0).epsilon(1e-12));

  for (int t = 0; t < 100; ++t) {
    const ImageGrid r = oracle::random_image(5, 5, gen);
    const ImageGrid obs = oracle::random_image(5, 5, gen);
    const ImageGrid rec = oracle::random_image(5, 5, gen);
    CHECK((isnr(obs, rec, r) > 0.0) == (rmse(rec, r) < rmse(obs, r)));
  }
}

TEST_CASE("mean SSIM") {
  std::mt19937_64 gen(32);
  const ImageGrid u = make_stripe_phantom(48, 48, 0.5, StripeProfile::Affine, 6, 2);
  CHECK(mssim(u, u) == doctest::Approx(1.0).epsilon(1e-12));

  std::normal_distribution<double> noise(0.0, 1.0);
  ImageGrid light = u, heavy = u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double n = noise(gen);
    light[i] += 0.02 * n;
    heavy[i] += 0.2 * n;
  }
  CHECK(mssim(heavy, u) < mssim(light, u));
  CHECK(mssim(light, u) == doctest::Approx(mssim(u, light)).epsilon(1e-12));

  for (int t = 0; t < 20; ++t) {
    const ImageGrid a = oracle::random_image(16, 16, gen, 0.0, 1.0);
    const ImageGrid b = oracle::random_image(16, 16, gen, 0.0, 1.0);
    const double s = mssim(a, b);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
  CHECK(ssim_map(u, u).height() == 38);
  CHECK_THROWS_AS(mssim(ImageGrid(8, 20), ImageGrid(8, 20)), Error);
}

TEST_CASE("quality record CSV and error images") {
  const ImageGrid ref(12, 12, 0.5);
  ImageGrid b = ref, rec = ref;
  b[0] = 1.0;
  rec[0] = 0.6;
  const QualityRecord q = evaluate("DTGV", b, rec, ref);
  CHECK(q.rmse == doctest::Approx(0.1 / 12.0));
  CHECK(csv_header(q) == "label,RMSE,ISNR,MSSIM");
  CHECK(csv_row(q).rfind("DTGV,", 0) == 0);

  const auto errs = scaled_error_images({b, rec}, ref);
  REQUIRE(errs.size() == 2);
  CHECK(errs[0][0] == 1.0);
  CHECK(errs[1][0] == doctest::Approx(0.2));
  CHECK(errs[0][1] == 0.0);
}
