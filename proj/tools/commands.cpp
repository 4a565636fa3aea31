#include "commands.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rgeom/data.hpp"
#include "rgeom/error.hpp"
#include "rgeom/geometry.hpp"
#include "rgeom/io.hpp"
#include "rgeom/rng.hpp"
#include "rgeom/stochastic.hpp"

namespace rgeom::cli {

namespace {

namespace fs = std::filesystem;

// Comma lists arrive split when read from a config file; rejoin them.
CLI::Option* comma_list(CLI::Option* opt) {
  return opt->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::Join);
}

struct Globals {
  std::uint64_t seed = 0;
  std::string out = ".";
  int threads = 0;
};

class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  const fs::path path = fs::path(g.out) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open output file " + path.string());
  return f;
}

void write_key(std::ostream& out, const std::string& key, double v) {
  out << key << '=' << io::format_double(v) << '\n';
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(what + ": not a number: '" + s + "'");
  }
}

long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(what + ": not an integer: '" + s + "'");
  }
}

// "8,16,32" or "geom:<first>:<last>:<count>" (rounded, deduplicated).
std::vector<Eigen::Index> parse_n_grid(const std::string& spec) {
  std::vector<Eigen::Index> grid;
  if (spec.rfind("geom:", 0) == 0) {
    const auto parts = split(spec.substr(5), ':');
    if (parts.size() != 3) throw InputError("n-grid: expected geom:<first>:<last>:<count>");
    const long first = parse_int(parts[0], "n-grid");
    const long last = parse_int(parts[1], "n-grid");
    const long count = parse_int(parts[2], "n-grid");
    if (first < 1 || last < first || count < 1 || (count == 1 && last != first)) {
      throw InputError("n-grid: need 1 <= first <= last and count >= 2 unless first == last");
    }
    for (long i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
      grid.push_back(static_cast<Eigen::Index>(
          std::llround(std::exp((1.0 - t) * std::log(first) + t * std::log(last)))));
    }
  } else {
    for (const auto& part : split(spec, ',')) {
      const long n = parse_int(part, "n-grid");
      if (n < 1) throw InputError("n-grid: entries must be >= 1");
      grid.push_back(n);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) throw InputError("n-grid: empty");
  return grid;
}

// Latent endpoint: a column index of X or a comma-separated vector.
Vector parse_endpoint(const std::string& s, const Matrix& X, const std::string& what) {
  if (s.find(',') == std::string::npos && s.find('.') == std::string::npos) {
    const long idx = parse_int(s, what);
    if (idx < 0 || idx >= X.cols()) {
      throw InputError(what + ": index " + s + " outside [0, " + std::to_string(X.cols()) + ")");
    }
    return X.col(idx);
  }
  const auto parts = split(s, ',');
  if (static_cast<Eigen::Index>(parts.size()) != X.rows()) {
    throw InputError(what + ": expected " + std::to_string(X.rows()) + " coordinates");
  }
  Vector v(X.rows());
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_real(parts[i], what);
  return v;
}

Matrix read_csv_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path);
  return io::read_matrix_csv(f);
}

// Least-squares slope of log(rel_err) against log(n) over n >= n_max / 10,
// using the rows with positive rel_err. NaN when fewer than two remain.
double top_decade_slope(const BoundReport& report) {
  const double n_max = static_cast<double>(report.rows.back().n);
  std::vector<double> x, y;
  for (const auto& r : report.rows) {
    if (static_cast<double>(r.n) >= n_max / 10.0 && r.rel_err > 0.0) {
      x.push_back(std::log(static_cast<double>(r.n)));
      y.push_back(std::log(r.rel_err));
    }
  }
  if (x.size() < 2) return std::nan("");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------- synth-data

struct SynthArgs {
  int size = 32;
  int rotations = 100;
  std::string image;
};

int cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out) {
  const ImageGrid img = a.image.empty() ? synth_image(a.size, g.seed) : read_pgm_file(a.image);
  if (!img.square()) throw InputError("synth-data: image must be square");
  const Dataset data = make_rotation_dataset(img, a.rotations);
  {
    auto f = open_output(g, "data.csv");
    io::write_matrix_csv(f, data.Y);
  }
  {
    auto f = open_output(g, "image.pgm");
    write_pgm(f, img);
  }
  auto f = open_output(g, "manifest.txt");
  f << "source=" << (a.image.empty() ? "synthetic" : a.image) << '\n'
    << "size=" << img.width << '\n'
    << "n_rotations=" << a.rotations << '\n'
    << "seed=" << g.seed << '\n'
    << "m=" << data.Y.rows() << '\n'
    << "N=" << data.Y.cols() << '\n'
    << "layout=row-major pixels, column k rotated by 2 pi k / N\n";
  out << "wrote " << data.Y.rows() << " x " << data.Y.cols() << " dataset\n";
  return kSuccess;
}

// ----------------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  int latent_dim = 6;
  std::string kernel = "rbf";
  int max_iters = 2000;
  double noise = -1.0;
  bool fix_noise = false;
  bool fix_kernel = false;
};

int cmd_fit(const Globals& g, const FitArgs& a, std::ostream& out) {
  Dataset data{read_csv_file(a.data)};
  FitConfig cfg;
  cfg.latent_dim = a.latent_dim;
  cfg.max_iters = a.max_iters;
  cfg.seed = g.seed;
  cfg.family = parse_kernel_family(a.kernel);
  cfg.initial_noise = a.noise;
  cfg.optimize_noise = !a.fix_noise;
  cfg.optimize_hyperparams = !a.fix_kernel;
  const FitResult fit = fit_gplvm(data, cfg);
  // Fails early with a numerical error if the fitted model cannot be factored.
  make_posterior(fit.spec, fit.X, data.Y, fit.noise);

  {
    auto f = open_output(g, "model.txt");
    io::write_model(f, io::Model{fit.spec, fit.noise, fit.X, data.Y});
  }
  {
    auto f = open_output(g, "fit_trace.csv");
    f << "iteration,log_likelihood\n";
    for (std::size_t i = 0; i < fit.trace.size(); ++i) f << i << ',' << io::format_double(fit.trace[i]) << '\n';
  }
  out << "log_likelihood=" << io::format_double(fit.log_likelihood) << '\n'
      << "iterations=" << fit.iterations << '\n'
      << "converged=" << (fit.converged ? 1 : 0) << '\n';
  if (!fit.converged) throw NotConverged("fit: no convergence after " + std::to_string(fit.iterations) + " iterations");
  return kSuccess;
}

// ------------------------------------------------------------------ geodesic

struct GeodesicArgs {
  std::string model;
  std::string from = "0";
  std::string to = "1";
  long nodes = 64;
  int max_iters = 2000;
  double tol = 1e-10;
};

int cmd_geodesic(const Globals& g, const GeodesicArgs& a, std::ostream& out) {
  const io::Model model = io::load_model(a.model);
  const auto post = std::make_shared<const PosteriorGP>(
      make_posterior(model.spec, model.X, model.Y, model.noise));
  const MetricField metric = MetricField::from_posterior(post);
  const Vector za = parse_endpoint(a.from, model.X, "from");
  const Vector zb = parse_endpoint(a.to, model.X, "to");

  GeodesicResult result;
  if (za == zb) {
    result.curve.params = Vector::Zero(1);
    result.curve.points = za;
    result.converged = true;
  } else {
    GeodesicConfig cfg;
    cfg.nodes = a.nodes;
    cfg.max_iters = a.max_iters;
    cfg.tolerance = a.tol;
    result = geodesic(metric, za, zb, cfg);
  }
  {
    auto f = open_output(g, "geodesic.csv");
    io::write_curve_csv(f, result.curve);
  }
  {
    auto f = open_output(g, "geodesic_report.txt");
    write_key(f, "energy", result.energy);
    write_key(f, "length", result.length);
    write_key(f, "speed_cov", result.speed_cov);
    f << "iterations=" << result.iterations << '\n' << "converged=" << (result.converged ? 1 : 0) << '\n';
  }
  out << "length=" << io::format_double(result.length) << '\n'
      << "speed_cov=" << io::format_double(result.speed_cov) << '\n'
      << "converged=" << (result.converged ? 1 : 0) << '\n';
  if (!result.converged) throw NotConverged("geodesic: no convergence after " + std::to_string(result.iterations) + " iterations");
  return kSuccess;
}

// --------------------------------------------------------------------- decay

struct DecayArgs {
  std::string model;
  std::string n_grid = "geom:8:1024:8";
  int samples = 2000;
  long nodes = 256;
  double variance_scale = 1.0;
  bool plain_mc = false;
  bool antithetic = false;
};

int cmd_decay(const Globals& g, const DecayArgs& a, std::ostream& out) {
  const io::Model model = io::load_model(a.model);
  if (model.X.cols() < 2) throw InputError("decay: model needs at least two latent points");
  const PosteriorGP post = make_posterior(model.spec, model.X, model.Y, model.noise);
  std::vector<Eigen::Index> grid = parse_n_grid(a.n_grid);
  if (grid.back() > model.Y.rows()) {
    throw InputError("decay: n-grid exceeds the data dimension " + std::to_string(model.Y.rows()));
  }
  const auto segment = DiscreteCurve::straight(model.X.col(0), model.X.col(1), 1);
  const CurveProcess cp = restrict_to_curve(post, segment, a.nodes).with_variance_scale(a.variance_scale);

  MonteCarloOptions opts;
  opts.samples = a.samples;
  opts.seed = g.seed;
  opts.control_variate = !a.plain_mc;
  opts.antithetic = a.antithetic;
  const BoundReport report = bound_report(cp, grid, opts);
  {
    auto f = open_output(g, "decay.csv");
    io::write_bound_report_csv(f, report);
  }
  const double slope = top_decade_slope(report);
  int flagged = 0;
  for (const auto& r : report.rows) flagged += r.flag ? 1 : 0;
  {
    auto f = open_output(g, "decay_summary.txt");
    write_key(f, "A", report.A);
    write_key(f, "b", report.b);
    f << "n0=" << (report.n0 ? std::to_string(*report.n0) : "none") << '\n'
      << "flagged_rows=" << flagged << '\n';
    write_key(f, "top_decade_slope", slope);
    f << "samples=" << a.samples << '\n'
      << "estimator=" << (a.plain_mc ? "plain" : "taylor_control_variate")
      << (a.antithetic ? "+antithetic" : "") << '\n';
  }
  out << "flagged_rows=" << flagged << '\n' << "top_decade_slope=" << io::format_double(slope) << '\n';
  return kSuccess;
}

// --------------------------------------------------------------------- swirl

struct SwirlArgs {
  int samples = 200;
};

int cmd_swirl(const Globals& g, const SwirlArgs& a, std::ostream& out) {
  if (a.samples < 2) throw InputError("swirl: need at least 2 samples");
  Rng rng(g.seed, 0);
  Matrix Z(2, a.samples), W(2, a.samples);
  for (int i = 0; i < a.samples; ++i) {
    Z(0, i) = rng.normal();
    Z(1, i) = rng.normal();
    W.col(i) = swirl(Z.col(i));
  }
  {
    auto f = open_output(g, "swirl_points.csv");
    f << "z1,z2,g1,g2\n";
    for (int i = 0; i < a.samples; ++i) {
      f << io::format_double(Z(0, i)) << ',' << io::format_double(Z(1, i)) << ','
        << io::format_double(W(0, i)) << ',' << io::format_double(W(1, i)) << '\n';
    }
  }
  double max_rel = 0.0;
  double max_norm_err = 0.0;
  {
    auto f = open_output(g, "swirl_distances.csv");
    f << "i,j,before,after\n";
    for (int i = 0; i < a.samples; ++i) {
      max_norm_err = std::max(max_norm_err, std::abs(W.col(i).norm() - Z.col(i).norm()));
      for (int j = i + 1; j < a.samples; ++j) {
        const double before = (Z.col(i) - Z.col(j)).norm();
        const double after = (W.col(i) - W.col(j)).norm();
        if (before > 0.0) max_rel = std::max(max_rel, std::abs(after - before) / before);
        f << i << ',' << j << ',' << io::format_double(before) << ',' << io::format_double(after) << '\n';
      }
    }
  }
  auto f = open_output(g, "swirl_summary.txt");
  f << "samples=" << a.samples << '\n';
  write_key(f, "max_relative_distance_change", max_rel);
  write_key(f, "max_norm_change", max_norm_err);
  out << "max_relative_distance_change=" << io::format_double(max_rel) << '\n';
  return kSuccess;
}

// ------------------------------------------------------------------ balanced

struct BalancedArgs {
  std::string family = "gaussian";
  std::string n_grid = "geom:10:1000:7";
  int samples = 20000;
};

int cmd_balanced(const Globals& g, const BalancedArgs& a, std::ostream& out) {
  const ComponentFamily family = parse_component_family(a.family);
  const auto grid = parse_n_grid(a.n_grid);
  if (a.samples < 2) throw InputError("balanced: need at least 2 samples");
  auto f = open_output(g, "balanced.csv");
  f << "n,m_n,Sigma_n,E_w_empirical,stderr,expansion,E_w_reference,absdiff_n2\n";
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto n = grid[j];
    const BalancedStats exact = balanced_stats_iid(component_moments(family), n);
    const EmpiricalBalancedStats emp =
        sample_balanced_stats(family, n, a.samples, substream_seed(g.seed, j));
    const double expansion = expected_norm_expansion(exact.m_n, exact.sigma_n, n);
    // Exact mean where it is known in closed form, the sample mean otherwise.
    double reference = emp.mean_w;
    if (family == ComponentFamily::Gaussian) reference = normalized_chi_mean(n);
    else if (family == ComponentFamily::Deterministic) reference = 1.0;
    const double nn = static_cast<double>(n);
    f << n << ',' << io::format_double(exact.m_n) << ',' << io::format_double(exact.sigma_n) << ','
      << io::format_double(emp.mean_w) << ',' << io::format_double(emp.se_mean_w) << ','
      << io::format_double(expansion) << ',' << io::format_double(reference) << ','
      << io::format_double(std::abs(reference - expansion) * nn * nn) << '\n';
  }
  out << "wrote " << grid.size() << " rows\n";
  return kSuccess;
}

std::string escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    if (c == '\n' || c == '\r') r += ' ';
    else if (c == '"' || c == '\\') r += {'\\', c};
    else r += c;
  }
  return r;
}

int fail(std::ostream& err, int code, const char* kind, const std::string& message) {
  err << "rgeom-error kind=" << kind << " message=\"" << escape(message) << "\"\n";
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic Riemannian geometry of GP latent variable models"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file ([section] per subcommand); flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0: all available)")->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-data", "rotation dataset from a synthetic or PGM image");
  c_synth->add_option("--size", synth.size, "image side in pixels")->capture_default_str();
  c_synth->add_option("--n-rotations", synth.rotations, "number of rotations N")->capture_default_str();
  c_synth->add_option("--image", synth.image, "grayscale PGM to use instead of the synthetic image");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "GPLVM maximum-likelihood fit");
  c_fit->add_option("--data", fit.data, "dataset CSV (m rows, N columns)")->required();
  c_fit->add_option("--latent-dim", fit.latent_dim, "latent dimension d")->capture_default_str();
  c_fit->add_option("--kernel", fit.kernel, "rbf or linear")->capture_default_str();
  c_fit->add_option("--max-iters", fit.max_iters, "optimizer iterations")->capture_default_str();
  c_fit->add_option("--noise", fit.noise, "initial noise variance (negative: automatic)")->capture_default_str();
  c_fit->add_flag("--fix-noise", fit.fix_noise, "keep the noise variance fixed");
  c_fit->add_flag("--fix-kernel", fit.fix_kernel, "keep kernel hyperparameters fixed");

  GeodesicArgs geo;
  auto* c_geo = app.add_subcommand("geodesic", "geodesic under the expected metric");
  c_geo->add_option("--model", geo.model, "model file")->required();
  comma_list(c_geo->add_option("--from", geo.from, "latent index or comma-separated vector")->capture_default_str());
  comma_list(c_geo->add_option("--to", geo.to, "latent index or comma-separated vector")->capture_default_str());
  c_geo->add_option("--nodes", geo.nodes, "curve segments")->capture_default_str();
  c_geo->add_option("--max-iters", geo.max_iters, "solver iterations")->capture_default_str();
  c_geo->add_option("--tol", geo.tol, "relative energy tolerance")->capture_default_str();

  DecayArgs decay;
  auto* c_decay = app.add_subcommand("decay", "relative length error against the n-dimensional bound");
  c_decay->add_option("--model", decay.model, "model file")->required();
  comma_list(c_decay->add_option("--n-grid", decay.n_grid, "list a,b,c or geom:<first>:<last>:<count>")->capture_default_str());
  c_decay->add_option("--samples", decay.samples, "Monte Carlo samples")->capture_default_str();
  c_decay->add_option("--nodes", decay.nodes, "curve nodes")->capture_default_str();
  c_decay->add_option("--variance-scale", decay.variance_scale, "multiplier on the node covariance")->capture_default_str();
  c_decay->add_flag("--plain-mc", decay.plain_mc, "disable the Taylor control variate");
  c_decay->add_flag("--antithetic", decay.antithetic, "pair draws with their reflections");

  SwirlArgs sw;
  auto* c_swirl = app.add_subcommand("swirl", "swirl reparametrization of Gaussian samples");
  c_swirl->add_option("--samples", sw.samples, "number of points")->capture_default_str();

  BalancedArgs bal;
  auto* c_bal = app.add_subcommand("balanced", "norm expansion for balanced random vectors");
  c_bal->add_option("--family", bal.family, "gaussian, uniform or deterministic")->capture_default_str();
  comma_list(c_bal->add_option("--n-grid", bal.n_grid, "list a,b,c or geom:<first>:<last>:<count>")->capture_default_str());
  c_bal->add_option("--samples", bal.samples, "Monte Carlo samples")->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    return fail(err, kInputError, "input", e.what());
  }

  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*c_synth) return cmd_synth(g, synth, out);
    if (*c_fit) return cmd_fit(g, fit, out);
    if (*c_geo) return cmd_geodesic(g, geo, out);
    if (*c_decay) return cmd_decay(g, decay, out);
    if (*c_swirl) return cmd_swirl(g, sw, out);
    if (*c_bal) return cmd_balanced(g, bal, out);
  } catch (const InputError& e) {
    return fail(err, kInputError, "input", e.what());
  } catch (const PreconditionError& e) {
    return fail(err, kInputError, "precondition", e.what());
  } catch (const NumericalError& e) {
    return fail(err, kNumericalError, "numerical", e.what());
  } catch (const NotConverged& e) {
    return fail(err, kNotConverged, "not_converged", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(err, kInputError, "input", e.what());
  }
  return fail(err, kInputError, "input", "no subcommand");
}

}  // namespace rgeom::cli
