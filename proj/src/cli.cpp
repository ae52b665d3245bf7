#include "dtgv/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "dtgv/admm.hpp"
#include "dtgv/degradation.hpp"
#include "dtgv/direction.hpp"
#include "dtgv/io.hpp"
#include "dtgv/metrics.hpp"
#include "dtgv/tuning.hpp"

namespace dtgv::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kDeg = std::numbers::pi / 180.0;

// Files written by a command; removed again unless the command completes.
class Outputs {
 public:
  Outputs() = default;
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;
  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : files_) fs::remove(p, ec);
  }
  const fs::path& add(const fs::path& p) {
    files_.push_back(p);
    return files_.back();
  }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> files_;
  bool committed_ = false;
};

std::string format(double v, int precision = 8) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Shared option groups

struct PsfFlags {
  std::string type = "out-of-focus";
  double parameter = 5.0;
  std::size_t size = 0;
  CLI::Option* type_opt = nullptr;
  CLI::Option* param_opt = nullptr;
  CLI::Option* size_opt = nullptr;

  void add(CLI::App* app) {
    type_opt = app->add_option("--psf", type, "Blur kernel: out-of-focus or gaussian")
                   ->check(CLI::IsMember({"out-of-focus", "gaussian"}));
    param_opt = app->add_option("--psf-param", parameter,
                                "Disk radius (out-of-focus) or variance (gaussian)");
    size_opt = app->add_option("--psf-size", size, "Odd kernel size; 0 picks a default");
  }

  bool given() const { return type_opt->count() + param_opt->count() + size_opt->count() > 0; }

  PsfChoice choice() const {
    return PsfChoice{type == "gaussian" ? PsfType::Gaussian : PsfType::OutOfFocus, parameter, size};
  }

  // Fills unset fields from an observation's sidecar.
  void merge(const KeyValues& meta) {
    if (!type_opt->count() && meta.count("psf")) type = meta.at("psf");
    if (!param_opt->count() && meta.count("psf_param")) parameter = std::stod(meta.at("psf_param"));
    if (!size_opt->count() && meta.count("psf_size")) size = std::stoul(meta.at("psf_size"));
  }
};

std::string psf_name(const PsfChoice& p) {
  return p.type == PsfType::Gaussian ? "gaussian" : "out-of-focus";
}

struct SolverFlags {
  double lambda = 0.0;
  std::string lambda_grid;
  double rho = 10.0;
  double beta = 2.0 / 3.0;
  std::optional<double> alpha0;
  std::optional<double> alpha1;
  double theta_deg = 0.0;
  double a = 1.0;
  double tol = 1e-4;
  int k_max = 500;
  double gamma = 1e-10;
  std::string regularizer = "dtgv";
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* theta_opt = nullptr;
  CLI::Option* a_opt = nullptr;

  void add(CLI::App* app, bool with_lambda = true) {
    if (with_lambda) {
      lambda_opt = app->add_option("--lambda", lambda, "Regularization weight of the KL term");
    }
    grid_opt = app->add_option("--lambda-grid", lambda_grid,
                               "Comma-separated lambda values tried in turn");
    app->add_option("--rho", rho, "ADMM penalty parameter")->capture_default_str();
    app->add_option("--beta", beta, "alpha0 = beta, alpha1 = 1 - beta")->capture_default_str();
    app->add_option("--alpha0", alpha0, "Weight of the first-order term (overrides --beta)");
    app->add_option("--alpha1", alpha1, "Weight of the second-order term (overrides --beta)");
    theta_opt = app->add_option("--theta", theta_deg,
                                "Texture direction in degrees; estimated when omitted");
    a_opt = app->add_option("--a", a, "Weight of the cross-direction difference")
                ->capture_default_str();
    app->add_option("--tol", tol, "Relative-change stopping threshold")->capture_default_str();
    app->add_option("--kmax", k_max, "Iteration limit")->capture_default_str();
    app->add_option("--gamma", gamma, "Background level")->capture_default_str();
    app->add_option("--regularizer", regularizer, "dtgv or tgv")
        ->check(CLI::IsMember({"dtgv", "tgv"}))
        ->capture_default_str();
  }

  SolverConfig config() const {
    SolverConfig c;
    c.lambda = lambda > 0.0 ? lambda : 1.0;
    c.rho = rho;
    c.set_beta(beta);
    if (alpha0) c.alpha0 = *alpha0;
    if (alpha1) c.alpha1 = *alpha1;
    c.tol = tol;
    c.k_max = k_max;
    c.gamma = gamma;
    c.regularizer = regularizer == "tgv" ? Regularizer::Tgv : Regularizer::Dtgv;
    c.direction = {theta_deg * kDeg, a};
    if (c.regularizer == Regularizer::Tgv) c.direction = {0.0, 1.0};
    return c;
  }
};

struct PhantomFlags {
  std::size_t height = 128;
  std::size_t width = 128;
  double theta_deg = 30.0;
  int stripes = 10;
  std::string profile = "affine";
  std::uint64_t seed = 7;

  void add(CLI::App* app) {
    app->add_option("--height", height, "Phantom height")->capture_default_str();
    app->add_option("--width", width, "Phantom width")->capture_default_str();
    app->add_option("--phantom-theta", theta_deg, "Phantom stripe direction in degrees")
        ->capture_default_str();
    app->add_option("--stripes", stripes, "Number of stripes")->capture_default_str();
    app->add_option("--profile", profile, "affine or constant")
        ->check(CLI::IsMember({"affine", "constant"}))
        ->capture_default_str();
    app->add_option("--phantom-seed", seed, "Phantom generator seed")->capture_default_str();
  }

  ImageGrid build() const {
    return make_stripe_phantom(height, width, theta_deg * kDeg,
                               profile == "constant" ? StripeProfile::Constant : StripeProfile::Affine,
                               stripes, seed);
  }
};

void require_exists(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorCode::Io, p.string() + ": no such file");
}

KeyValues sidecar_of(const fs::path& image) {
  const fs::path meta = sidecar_path(image);
  return fs::exists(meta) ? read_key_values(meta) : KeyValues{};
}

ImageGrid scaled(ImageGrid img, double factor) {
  for (double& v : img.data()) v *= factor;
  return img;
}

// ---------------------------------------------------------------------------
// degrade

struct DegradeCmd {
  std::string input;
  bool phantom = false;
  PhantomFlags phantom_flags;
  std::string phantom_out;
  std::string output;
  PsfFlags psf;
  double snr = 43.0;
  double gamma = 1e-10;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    auto* in = app->add_option("--input", input, "Reference image (PNG or PGM)");
    auto* ph = app->add_flag("--phantom", phantom, "Generate a stripe phantom as the reference");
    in->excludes(ph);
    phantom_flags.add(app);
    app->add_option("--phantom-out", phantom_out, "Write the generated phantom here");
    app->add_option("--output,-o", output, "Degraded image")->required();
    psf.add(app);
    app->add_option("--snr", snr, "Target SNR in dB")->capture_default_str();
    app->add_option("--gamma", gamma, "Background level")->capture_default_str();
    app->add_option("--seed", seed, "Noise seed")->capture_default_str();
  }

  int run(std::ostream& out) const {
    if (input.empty() && !phantom) {
      throw Error(ErrorCode::InvalidArgument, "degrade needs --input or --phantom");
    }
    if (!input.empty()) require_exists(input);
    const ImageGrid u = phantom ? phantom_flags.build() : read_image(input);
    const PsfChoice choice = psf.choice();
    const auto blur = make_blur_operator(choice.build(), u.height(), u.width());
    DegradationConfig dc;
    dc.psf = choice;
    dc.target_snr = snr;
    dc.gamma_const = gamma;
    dc.seed = seed;
    const DegradationResult d = degrade(u, dc, blur);

    Outputs files;
    const fs::path out_path = files.add(output);
    std::string encoding = "quantized-16bit";
    const bool exact = fs::path(output).extension() == ".pgm" && d.normalization <= 65535.0 &&
                       d.normalization == std::floor(d.normalization);
    if (exact) {
      write_pgm(out_path, d.b, static_cast<unsigned>(d.normalization));
      encoding = "counts";
    } else {
      write_image(out_path, d.b);
    }

    KeyValues meta;
    meta["source"] = phantom ? "phantom" : input;
    if (phantom) {
      meta["phantom_theta_deg"] = format(phantom_flags.theta_deg);
      meta["phantom_stripes"] = std::to_string(phantom_flags.stripes);
      meta["phantom_profile"] = phantom_flags.profile;
      meta["phantom_seed"] = std::to_string(phantom_flags.seed);
    }
    meta["height"] = std::to_string(u.height());
    meta["width"] = std::to_string(u.width());
    meta["psf"] = psf_name(choice);
    meta["psf_param"] = format(choice.parameter, 17);
    meta["psf_size"] = std::to_string(choice.build().rows);
    meta["snr_target"] = format(snr, 17);
    meta["snr_realized"] = format(d.realized_snr, 17);
    meta["gamma"] = format(gamma, 17);
    meta["seed"] = std::to_string(seed);
    meta["scale"] = format(d.scale, 17);
    meta["normalization"] = format(d.normalization, 17);
    meta["reference_scale"] = format(d.scale / d.normalization, 17);
    meta["encoding"] = encoding;
    write_key_values(files.add(sidecar_path(out_path)), meta);

    if (phantom && !phantom_out.empty()) write_image(files.add(phantom_out), u);
    files.commit();
    out << "wrote " << output << " (" << choice.describe() << ", SNR " << format(d.realized_snr, 6)
        << " dB, seed " << seed << ")\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// estimate-direction

struct EstimateCmd {
  std::string input;
  std::string dumps;
  int bins_per_degree = 1;
  bool weighted = false;

  void add(CLI::App* app) {
    app->add_option("--input", input, "Observed image")->required();
    app->add_option("--debug-dumps", dumps,
                    "Directory for edge, masked-edge and Hough images plus scores.csv");
    app->add_option("--bins-per-degree", bins_per_degree, "Hough angle resolution")
        ->capture_default_str();
    app->add_flag("--weighted-votes", weighted, "Vote with edge magnitudes");
  }

  int run(std::ostream& out) const {
    require_exists(input);
    const ImageGrid b = read_image(input);
    DirectionConfig cfg;
    cfg.bins_per_degree = bins_per_degree;
    cfg.weighted_votes = weighted;
    const DirectionAnalysis a = analyze_direction(b, cfg);

    if (!dumps.empty()) {
      Outputs files;
      fs::create_directories(dumps);
      const fs::path dir(dumps);
      auto edge_image = [](const EdgeImage& e, bool flags) {
        ImageGrid img(e.grid.height, e.grid.width);
        double top = 0.0;
        for (double m : e.magnitude) top = std::max(top, m);
        for (std::size_t i = 0; i < img.size(); ++i) {
          img[i] = flags ? e.flags[i] : (top > 0.0 ? e.magnitude[i] / top : 0.0);
        }
        return img;
      };
      write_image(files.add(dir / "edges.png"), edge_image(a.edges, false));
      write_image(files.add(dir / "edges_masked.png"), edge_image(a.masked, true));

      ImageGrid hough(a.hough.rows(), a.hough.cols());
      double top = 0.0;
      for (double v : a.hough.counts) top = std::max(top, v);
      // Counts are column-major with one column per angle, as in ImageGrid.
      for (std::size_t i = 0; i < hough.size(); ++i) {
        hough[i] = top > 0.0 ? a.hough.counts[i] / top : 0.0;
      }
      write_image(files.add(dir / "hough.png"), hough);

      std::ofstream csv(files.add(dir / "scores.csv"));
      csv << "eta_deg,score\n" << std::setprecision(17);
      for (std::size_t k = 0; k < a.estimate.scores.size(); ++k) {
        csv << a.hough.angles_deg[k] << ',' << a.estimate.scores[k] << '\n';
      }
      if (!csv) throw Error(ErrorCode::Io, "cannot write scores.csv");
      files.commit();
    }

    out << "theta_deg = " << format(a.estimate.theta / kDeg) << '\n'
        << "theta_rad = " << format(a.estimate.theta, 12) << '\n'
        << "eta_max_deg = " << format(a.estimate.eta_max) << '\n';
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// restore

double resolve_reference_scale(const CLI::Option* opt, double given, const KeyValues& meta,
                               std::ostream& err) {
  if (opt->count()) return given;
  if (meta.count("reference_scale")) {
    const double s = std::stod(meta.at("reference_scale"));
    err << "note: reference rescaled by " << format(s) << " from the observation sidecar\n";
    return s;
  }
  return 1.0;
}

struct RestoreCmd {
  std::string input;
  std::string output;
  std::string reference;
  double reference_scale = 1.0;
  CLI::Option* ref_scale_opt = nullptr;
  std::string report;
  PsfFlags psf;
  SolverFlags solver;

  void add(CLI::App* app) {
    app->add_option("--input", input, "Observed image")->required();
    app->add_option("--output,-o", output, "Restored image")->required();
    app->add_option("--reference", reference, "Ground truth used for lambda selection and metrics");
    ref_scale_opt = app->add_option("--reference-scale", reference_scale,
                                    "Multiply the reference by this factor before comparing");
    app->add_option("--report", report, "Per-iteration CSV (default: <output>.report.csv)");
    psf.add(app);
    solver.add(app);
  }

  int run(std::ostream& out, std::ostream& err) {
    require_exists(input);
    if (!reference.empty()) require_exists(reference);
    const ImageGrid b = read_image(input);
    const KeyValues meta = sidecar_of(input);
    psf.merge(meta);
    if (!psf.given() && !meta.count("psf")) {
      err << "note: no PSF given; using " << psf.choice().describe() << '\n';
    }

    std::vector<double> lambdas;
    if (solver.lambda_opt->count() && solver.grid_opt->count()) {
      throw Error(ErrorCode::InvalidArgument, "give either --lambda or --lambda-grid, not both");
    }
    if (solver.grid_opt->count()) {
      lambdas = parse_list(solver.lambda_grid);
    } else if (solver.lambda_opt->count()) {
      lambdas = {solver.lambda};
    } else {
      throw Error(ErrorCode::InvalidArgument, "restore needs --lambda or --lambda-grid");
    }
    if (lambdas.size() > 1 && reference.empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "a lambda grid needs --reference to select the best value");
    }

    SolverConfig config = solver.config();
    if (config.regularizer == Regularizer::Tgv) {
      if (solver.theta_opt->count() || solver.a_opt->count()) {
        err << "note: tgv uses theta = 0 and a = 1; --theta/--a ignored\n";
      }
    } else if (!solver.theta_opt->count()) {
      const DirectionEstimate est = estimate_direction(b);
      config.direction.theta = est.theta;
      err << "estimated theta = " << format(est.theta / kDeg) << " deg\n";
    }

    const auto blur = make_blur_operator(psf.choice().build(), b.height(), b.width());
    const ProblemOperators ops = make_problem_operators(blur, config);

    std::optional<ImageGrid> ref;
    if (!reference.empty()) {
      ref = scaled(read_image(reference), resolve_reference_scale(ref_scale_opt, reference_scale, meta, err));
      require_same_grid(ref->grid(), b.grid(), "reference");
    }

    AdmmResult result;
    double lambda = lambdas.front();
    if (ref) {
      TuningResult tuned = tune_lambda(b, *ref, config, ops, lambdas);
      for (const auto& t : tuned.trials) {
        err << "lambda = " << format(t.lambda) << ": RMSE " << format(t.rmse, 6) << ", "
            << t.iterations << " iterations (" << to_string(t.stop_reason) << ")\n";
      }
      lambda = tuned.trials[tuned.best].lambda;
      result = std::move(tuned.best_result);
    } else {
      config.lambda = lambda;
      result = run_admm(b, config, ops);
    }
    config.lambda = lambda;

    Outputs files;
    const fs::path out_path = files.add(output);
    write_image(out_path, result.u);
    const fs::path report_path =
        files.add(report.empty() ? fs::path(output + ".report.csv") : fs::path(report));
    {
      std::ofstream csv(report_path);
      csv << result.report.to_csv();
      if (!csv) throw Error(ErrorCode::Io, report_path.string() + ": write failed");
    }

    KeyValues rmeta;
    rmeta["input"] = input;
    rmeta["regularizer"] = to_string(config.regularizer);
    rmeta["lambda"] = format(lambda, 17);
    rmeta["rho"] = format(config.rho, 17);
    rmeta["alpha0"] = format(config.alpha0, 17);
    rmeta["alpha1"] = format(config.alpha1, 17);
    rmeta["theta_rad"] = format(config.direction.theta, 17);
    rmeta["a"] = format(config.direction.a, 17);
    rmeta["tol"] = format(config.tol, 17);
    rmeta["kmax"] = std::to_string(config.k_max);
    rmeta["gamma"] = format(config.gamma, 17);
    rmeta["psf"] = psf_name(psf.choice());
    rmeta["psf_param"] = format(psf.parameter, 17);
    rmeta["iterations"] = std::to_string(result.report.iterations);
    rmeta["stop_reason"] = to_string(result.report.stop_reason);
    rmeta["seconds"] = format(result.report.total_seconds);
    rmeta["max_negativity"] = format(result.report.max_negativity);

    out << "regularizer = " << to_string(config.regularizer) << '\n'
        << "lambda = " << format(lambda) << '\n'
        << "theta_deg = " << format(config.direction.theta / kDeg) << '\n'
        << "iterations = " << result.report.iterations << '\n'
        << "stop_reason = " << to_string(result.report.stop_reason) << '\n'
        << "seconds = " << format(result.report.total_seconds, 4) << '\n';
    if (ref) {
      const QualityRecord q = evaluate(to_string(config.regularizer), b, result.u, *ref);
      rmeta["rmse"] = format(q.rmse, 17);
      rmeta["isnr"] = format(q.isnr, 17);
      rmeta["mssim"] = format(q.mssim, 17);
      out << "rmse = " << format(q.rmse) << '\n'
          << "isnr = " << format(q.isnr) << '\n'
          << "mssim = " << format(q.mssim) << '\n';
    }
    write_key_values(files.add(sidecar_path(out_path)), rmeta);
    files.commit();
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// metrics

struct MetricsCmd {
  std::string input;
  std::string reference;
  std::string observed;
  std::string label = "restored";
  double reference_scale = 1.0;
  CLI::Option* ref_scale_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--input", input, "Restored image")->required();
    app->add_option("--reference", reference, "Ground truth")->required();
    app->add_option("--observed", observed, "Observation for ISNR (default: the input's source)");
    app->add_option("--label", label, "Row label")->capture_default_str();
    ref_scale_opt = app->add_option("--reference-scale", reference_scale,
                                    "Multiply the reference by this factor before comparing");
  }

  int run(std::ostream& out, std::ostream& err) const {
    require_exists(input);
    require_exists(reference);
    const ImageGrid u = read_image(input);
    std::string obs = observed;
    if (obs.empty()) {
      const KeyValues meta = sidecar_of(input);
      if (!meta.count("input")) {
        throw Error(ErrorCode::InvalidArgument, "metrics needs --observed for ISNR");
      }
      obs = meta.at("input");
    }
    require_exists(obs);
    const ImageGrid b = read_image(obs);
    const ImageGrid ref =
        scaled(read_image(reference), resolve_reference_scale(ref_scale_opt, reference_scale,
                                                              sidecar_of(obs), err));
    const QualityRecord q = evaluate(label, b, u, ref);
    out << csv_header(q) << '\n' << csv_row(q) << '\n';
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkCmd {
  std::string input;
  PhantomFlags phantom;
  std::string blurs = "out-of-focus:5,gaussian:2";
  std::string snrs = "43,37";
  std::string models = "dtgv,tgv";
  std::string output;
  std::uint64_t seed = 11;
  SolverFlags solver;

  void add(CLI::App* app) {
    app->add_option("--input", input, "Reference image; a stripe phantom is used when omitted");
    phantom.add(app);
    app->add_option("--blurs", blurs, "Comma-separated kind:parameter list")->capture_default_str();
    app->add_option("--snrs", snrs, "Comma-separated SNR targets in dB")->capture_default_str();
    app->add_option("--models", models, "Comma-separated models (dtgv, tgv)")->capture_default_str();
    app->add_option("--output,-o", output, "CSV file (default: standard output)");
    app->add_option("--seed", seed, "Noise seed shared by every model of a cell")
        ->capture_default_str();
    solver.add(app, false);
  }

  static std::vector<PsfChoice> parse_blurs(const std::string& text) {
    std::vector<PsfChoice> out;
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "blur '" + item + "' must look like kind:parameter");
      }
      const std::string kind = item.substr(0, colon);
      if (kind != "out-of-focus" && kind != "gaussian") {
        throw Error(ErrorCode::InvalidArgument, "unknown blur kind '" + kind + "'");
      }
      out.push_back(PsfChoice{kind == "gaussian" ? PsfType::Gaussian : PsfType::OutOfFocus,
                              parse_list(item.substr(colon + 1)).at(0), 0});
    }
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no blurs given");
    return out;
  }

  static std::vector<std::string> parse_models(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ',')) {
      if (item != "dtgv" && item != "tgv") {
        throw Error(ErrorCode::InvalidArgument, "unknown model '" + item + "'");
      }
      out.push_back(item);
    }
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no models given");
    return out;
  }

  int run(std::ostream& out, std::ostream& err) const {
    if (!input.empty()) require_exists(input);
    const ImageGrid u = input.empty() ? phantom.build() : read_image(input);
    const auto blur_list = parse_blurs(blurs);
    const auto snr_list = parse_list(snrs);
    const auto model_list = parse_models(models);
    const std::vector<double> lambdas =
        solver.lambda_grid.empty() ? log_grid(1e2, 1e5, 7) : parse_list(solver.lambda_grid);

    std::ostringstream table;
    table << "Blur,SNR,Model,lambda,RMSE,ISNR,MSSIM,Iters,Time\n";
    for (const PsfChoice& psf : blur_list) {
      const auto blur = make_blur_operator(psf.build(), u.height(), u.width());
      for (double snr : snr_list) {
        DegradationConfig dc;
        dc.psf = psf;
        dc.target_snr = snr;
        dc.gamma_const = solver.gamma;
        dc.seed = seed;
        const DegradationResult d = degrade(u, dc, blur);
        const ImageGrid ref = reference_on_data_scale(u, d);
        double theta = solver.theta_deg * kDeg;
        if (!solver.theta_opt->count()) theta = estimate_direction(d.b).theta;

        for (const std::string& model : model_list) {
          SolverFlags flags = solver;
          flags.regularizer = model;
          SolverConfig config = flags.config();
          if (config.regularizer == Regularizer::Dtgv) config.direction.theta = theta;
          const ProblemOperators ops = make_problem_operators(blur, config);
          const TuningResult tuned = tune_lambda(d.b, ref, config, ops, lambdas);
          const LambdaTrial& best = tuned.trials[tuned.best];
          table << psf_name(psf) << ':' << format(psf.parameter) << ',' << format(snr) << ','
                << to_string(config.regularizer) << ',' << format(best.lambda) << ','
                << format(best.rmse) << ',' << format(best.isnr) << ',' << format(best.mssim)
                << ',' << best.iterations << ',' << format(best.seconds, 4) << '\n';
          err << psf.describe() << ", SNR " << snr << ", " << to_string(config.regularizer)
              << ": lambda " << format(best.lambda) << ", RMSE " << format(best.rmse, 6) << '\n';
        }
      }
    }

    if (output.empty()) {
      out << table.str();
    } else {
      Outputs files;
      std::ofstream csv(files.add(output));
      csv << table.str();
      if (!csv) throw Error(ErrorCode::Io, output + ": write failed");
      csv.close();
      files.commit();
      out << "wrote " << output << '\n';
    }
    return kExitOk;
  }
};

// Turns "--manifest FILE" into "--key=value" tokens placed right after the
// subcommand, so explicit flags later on the line win under TakeLast.
std::vector<std::string> expand_manifest(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> manifest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--manifest needs a file");
      manifest = args[++i];
    } else if (args[i].rfind("--manifest=", 0) == 0) {
      manifest = args[i].substr(11);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!manifest) return rest;
  require_exists(*manifest);
  const KeyValues kv = read_key_values(*manifest);
  if (rest.empty()) return rest;
  std::vector<std::string> out{rest[0]};
  for (const auto& [k, v] : kv) out.push_back("--" + k + "=" + v);
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used == 0 || used != item.size()) {
      throw Error(ErrorCode::InvalidArgument, "malformed number '" + item + "' in list");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty list");
  return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    out.push_back(std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo))));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"KL-DTGV2 Poisson deblurring toolkit", "dtgv"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  DegradeCmd degrade_cmd;
  EstimateCmd estimate_cmd;
  RestoreCmd restore_cmd;
  MetricsCmd metrics_cmd;
  BenchmarkCmd bench_cmd;
  auto* deg = app.add_subcommand("degrade", "Blur, add background and Poisson noise");
  auto* est = app.add_subcommand("estimate-direction", "Estimate the dominant texture direction");
  auto* res = app.add_subcommand("restore", "Restore an observation with KL-DTGV2 or KL-TGV2");
  auto* met = app.add_subcommand("metrics", "RMSE, ISNR and mean SSIM against a reference");
  auto* ben = app.add_subcommand("benchmark", "Degrade, estimate, restore and score a test grid");
  for (auto* sub : {deg, est, res, met, ben}) {
    sub->add_option("--manifest", "Flat key = value file of option defaults");
  }
  degrade_cmd.add(deg);
  estimate_cmd.add(est);
  restore_cmd.add(res);
  metrics_cmd.add(met);
  bench_cmd.add(ben);

  try {
    const std::vector<std::string> expanded =
        expand_manifest({args.begin() + (args.empty() ? 0 : 1), args.end()});
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (deg->parsed()) return degrade_cmd.run(out);
    if (est->parsed()) return estimate_cmd.run(out);
    if (res->parsed()) return restore_cmd.run(out, err);
    if (met->parsed()) return metrics_cmd.run(out, err);
    if (ben->parsed()) return bench_cmd.run(out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace dtgv::cli
