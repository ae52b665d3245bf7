#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "dtgv/admm.hpp"
#include "dtgv/degradation.hpp"
#include "dtgv/direction.hpp"
#include "dtgv/metrics.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace dtgv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// numpy arrays are (rows, cols) in C order; ImageGrid is column-major.
ImageGrid to_grid(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  auto v = a.unchecked<2>();
  ImageGrid img(h, w);
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) img(r, c) = v(r, c);
  }
  return img;
}

Array to_array(const ImageGrid& img) {
  Array a({img.height(), img.width()});
  auto v = a.mutable_unchecked<2>();
  for (std::size_t c = 0; c < img.width(); ++c) {
    for (std::size_t r = 0; r < img.height(); ++r) v(r, c) = img(r, c);
  }
  return a;
}

PsfChoice psf_choice(const std::string& type, double parameter, std::size_t size) {
  if (type == "gaussian") return {PsfType::Gaussian, parameter, size};
  if (type == "out-of-focus") return {PsfType::OutOfFocus, parameter, size};
  throw py::value_error("psf must be 'out-of-focus' or 'gaussian'");
}

Regularizer regularizer_of(const std::string& name) {
  if (name == "dtgv") return Regularizer::Dtgv;
  if (name == "tgv") return Regularizer::Tgv;
  throw py::value_error("regularizer must be 'dtgv' or 'tgv'");
}

py::dict degrade_py(const Array& u, const std::string& psf, double psf_param, std::size_t psf_size,
                    double snr, double gamma, std::uint64_t seed) {
  const ImageGrid img = to_grid(u);
  DegradationConfig dc;
  dc.psf = psf_choice(psf, psf_param, psf_size);
  dc.target_snr = snr;
  dc.gamma_const = gamma;
  dc.seed = seed;
  const auto blur = make_blur_operator(dc.psf.build(), img.height(), img.width());
  const DegradationResult d = degrade(img, dc, blur);
  return py::dict("b"_a = to_array(d.b), "reference"_a = to_array(reference_on_data_scale(img, d)),
                  "scale"_a = d.scale, "normalization"_a = d.normalization,
                  "realized_snr"_a = d.realized_snr);
}

py::dict estimate_py(const Array& b, int bins_per_degree, bool weighted_votes) {
  DirectionConfig cfg;
  cfg.bins_per_degree = bins_per_degree;
  cfg.weighted_votes = weighted_votes;
  const DirectionEstimate e = estimate_direction(to_grid(b), cfg);
  return py::dict("theta"_a = e.theta, "eta_max"_a = e.eta_max, "scores"_a = e.scores);
}

py::tuple restore_py(const Array& b_in, double lam, const std::string& psf, double psf_param,
                     std::size_t psf_size, std::optional<double> theta, double a, double rho,
                     double beta, double tol, int k_max, double gamma,
                     const std::string& regularizer) {
  const ImageGrid b = to_grid(b_in);
  SolverConfig c;
  c.lambda = lam;
  c.rho = rho;
  c.set_beta(beta);
  c.tol = tol;
  c.k_max = k_max;
  c.gamma = gamma;
  c.regularizer = regularizer_of(regularizer);
  c.direction = {theta ? *theta : 0.0, a};
  if (c.regularizer == Regularizer::Tgv) {
    c.direction = {0.0, 1.0};
  } else if (!theta) {
    c.direction.theta = estimate_direction(b).theta;
  }
  const auto blur = make_blur_operator(psf_choice(psf, psf_param, psf_size).build(), b.height(),
                                       b.width());
  AdmmResult r;
  {
    py::gil_scoped_release release;
    r = run_admm(b, c, make_problem_operators(blur, c));
  }
  const SolveReport& rep = r.report;
  py::dict report("iterations"_a = rep.iterations, "stop_reason"_a = to_string(rep.stop_reason),
                  "objective"_a = rep.objective, "residual"_a = rep.residual,
                  "normalized_residual"_a = rep.normalized_residual,
                  "relative_change"_a = rep.relative_change,
                  "initial_objective"_a = rep.initial_objective, "seconds"_a = rep.total_seconds,
                  "theta"_a = c.direction.theta);
  return py::make_tuple(to_array(r.u), report);
}

}  // namespace

PYBIND11_MODULE(_dtgv, m) {
  m.doc() = "KL-DTGV2 Poisson deblurring";

  py::register_exception<Error>(m, "DtgvError", PyExc_ValueError);

  m.def(
      "stripe_phantom",
      [](std::size_t height, std::size_t width, double theta, int stripes,
         const std::string& profile, std::uint64_t seed) {
        if (profile != "affine" && profile != "constant") {
          throw py::value_error("profile must be 'affine' or 'constant'");
        }
        return to_array(make_stripe_phantom(
            height, width, theta,
            profile == "affine" ? StripeProfile::Affine : StripeProfile::Constant, stripes, seed));
      },
      "height"_a, "width"_a, "theta"_a, "stripes"_a = 10, "profile"_a = "affine", "seed"_a = 7,
      "Stripe phantom in [0, 1]; theta (radians) is the stripe direction.");

  m.def("degrade", &degrade_py, "u"_a, "psf"_a = "out-of-focus", "psf_param"_a = 5.0,
        "psf_size"_a = 0, "snr"_a = 43.0, "gamma"_a = 1e-10, "seed"_a = 0,
        "Blur, add background and Poisson noise. Returns a dict with the observation 'b' and the\n"
        "'reference' on the same intensity scale.");

  m.def("estimate_direction", &estimate_py, "b"_a, "bins_per_degree"_a = 1,
        "weighted_votes"_a = false, "Dominant stripe direction (radians) of an observation.");

  m.def("restore", &restore_py, "b"_a, "lam"_a, "psf"_a = "out-of-focus", "psf_param"_a = 5.0,
        "psf_size"_a = 0, "theta"_a = py::none(), "a"_a = 1.0, "rho"_a = 10.0,
        "beta"_a = 2.0 / 3.0, "tol"_a = 1e-4, "k_max"_a = 500, "gamma"_a = 1e-10,
        "regularizer"_a = "dtgv",
        "ADMM restoration. theta is estimated when None. Returns (u, report).");

  m.def("prox_kl", &prox_kl_scalar, "d"_a, "b"_a, "gamma"_a, "lam"_a, "rho"_a);

  m.def("rmse", [](const Array& u, const Array& ref) { return rmse(to_grid(u), to_grid(ref)); },
        "u"_a, "reference"_a);
  m.def(
      "isnr",
      [](const Array& b, const Array& u, const Array& ref) {
        return isnr(to_grid(b), to_grid(u), to_grid(ref));
      },
      "b"_a, "u"_a, "reference"_a);
  m.def("mssim", [](const Array& u, const Array& ref) { return mssim(to_grid(u), to_grid(ref)); },
        "u"_a, "reference"_a);
}
