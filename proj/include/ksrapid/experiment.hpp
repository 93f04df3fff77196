#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ksrapid/closed_loop.hpp"
#include "ksrapid/controllability.hpp"
#include "ksrapid/fredholm_transform.hpp"
#include "ksrapid/kernel_io.hpp"
#include "ksrapid/kernel_synthesis.hpp"
#include "ksrapid/solver_verification.hpp"
#include "ksrapid/svg_plot.hpp"

namespace ksrapid {

/// Experiment orchestration: plain-text key = value configuration, presets
/// mirroring the acceptance runs, deterministic artifact emission with a
/// hashed manifest.
struct ExperimentConfig {
  std::string kind = "validate";
  Parameters params;
  std::string scheme = "cn";
  int grid = 0;   // 0: use n_sim
  int basis = 0;  // 0: use n_sim
  bool dealias = true;
  int picard = 1;
  bool nonlinear = true;
  double amplitude = 1e-2;
  std::vector<int> init_modes = {1};
  int sample_every = 10;
  int m_powers = 8;
  int retries = 0;
  bool weak_sweep = false;
  int gram_modes = 2;
  double gram_horizon = 0.0;  // 0: adaptive
  std::string sweep_param;
  std::vector<double> sweep_values;

  int effective_grid() const { return grid > 0 ? grid : params.n_sim; }
  int effective_basis() const { return basis > 0 ? basis : params.n_sim; }

  SolverConfig solver_config() const {
    SolverConfig cfg;
    cfg.scheme = (scheme == "bdf2") ? Scheme::BDF2IMEX : Scheme::CrankNicolsonIMEX;
    cfg.grid_size = effective_grid();
    cfg.dt = params.dt;
    cfg.dealias = dealias;
    cfg.picard_sweeps = picard;
    cfg.nonlinear = nonlinear;
    return cfg;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw SchemaError("config key '" + key + "': cannot parse '" + v + "' as a number");
  }
  if (pos != v.size())
    throw SchemaError("config key '" + key + "': trailing characters in '" + v + "'");
  return out;
}

inline int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  const int i = static_cast<int>(d);
  if (double(i) != d) throw SchemaError("config key '" + key + "': '" + v + "' is not an integer");
  return i;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw SchemaError("config key '" + key + "': cannot parse '" + v + "' as a boolean");
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SchemaError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (seen.count(key))
      throw SchemaError("config key '" + key + "' appears more than once");
    seen[key] = value;

    if (key == "kind") {
      static const std::vector<std::string> kinds = {"validate", "kernel",   "transform",
                                                     "simulate", "diagnose", "sweep",
                                                     "solver_check"};
      if (std::find(kinds.begin(), kinds.end(), value) == kinds.end())
        throw SchemaError("unknown experiment kind '" + value + "'");
      cfg.kind = value;
    } else if (key == "lambda") {
      cfg.params.lambda = detail::to_double(key, value);
    } else if (key == "a") {
      cfg.params.a = detail::to_double(key, value);
    } else if (key == "nu") {
      cfg.params.nu = detail::to_double(key, value);
    } else if (key == "eps_critical") {
      cfg.params.eps_critical = detail::to_double(key, value);
    } else if (key == "t_final") {
      cfg.params.t_final = detail::to_double(key, value);
    } else if (key == "dt") {
      cfg.params.dt = detail::to_double(key, value);
    } else if (key == "n_kernel") {
      cfg.params.n_kernel = detail::to_int(key, value);
    } else if (key == "n_sim") {
      cfg.params.n_sim = detail::to_int(key, value);
    } else if (key == "grid") {
      cfg.grid = detail::to_int(key, value);
    } else if (key == "basis") {
      cfg.basis = detail::to_int(key, value);
    } else if (key == "scheme") {
      if (value != "cn" && value != "bdf2")
        throw SchemaError("config key 'scheme': expected cn or bdf2, got '" + value + "'");
      cfg.scheme = value;
    } else if (key == "dealias") {
      cfg.dealias = detail::to_bool(key, value);
    } else if (key == "picard") {
      cfg.picard = detail::to_int(key, value);
    } else if (key == "nonlinear") {
      cfg.nonlinear = detail::to_bool(key, value);
    } else if (key == "amplitude") {
      cfg.amplitude = detail::to_double(key, value);
    } else if (key == "init_modes") {
      cfg.init_modes.clear();
      std::istringstream ms(value);
      std::string tok;
      while (std::getline(ms, tok, ','))
        cfg.init_modes.push_back(detail::to_int(key, detail::trim(tok)));
      if (cfg.init_modes.empty())
        throw SchemaError("config key 'init_modes': empty mode list");
    } else if (key == "sample_every") {
      cfg.sample_every = detail::to_int(key, value);
    } else if (key == "m_powers") {
      cfg.m_powers = detail::to_int(key, value);
    } else if (key == "retries") {
      cfg.retries = detail::to_int(key, value);
    } else if (key == "weak_sweep") {
      cfg.weak_sweep = detail::to_bool(key, value);
    } else if (key == "gram_modes") {
      cfg.gram_modes = detail::to_int(key, value);
    } else if (key == "gram_horizon") {
      cfg.gram_horizon = detail::to_double(key, value);
    } else if (key == "sweep_param") {
      static const std::vector<std::string> ok = {"lambda", "a", "nu", "amplitude"};
      if (std::find(ok.begin(), ok.end(), value) == ok.end())
        throw SchemaError("config key 'sweep_param': unsupported parameter '" + value + "'");
      cfg.sweep_param = value;
    } else if (key == "sweep_values") {
      cfg.sweep_values.clear();
      std::istringstream vs(value);
      std::string tok;
      while (std::getline(vs, tok, ','))
        cfg.sweep_values.push_back(detail::to_double(key, detail::trim(tok)));
    } else {
      throw SchemaError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

/// Built-in presets named after the acceptance criteria they reproduce.
inline std::string preset_config_text(const std::string& name) {
  const double lambda_critical = 5.0 * kPi * kPi;
  std::ostringstream os;
  os.precision(17);
  if (name == "ac1") {
    os << "kind = kernel\nlambda = 1\na = 10\nnu = 50\nn_kernel = 128\nn_sim = 256\n"
       << "weak_sweep = true\n";
  } else if (name == "ac2") {
    os << "kind = kernel\nlambda = 1\na = 10\nnu = 50\nn_kernel = 256\nn_sim = 256\n";
  } else if (name == "ac3") {
    os << "kind = kernel\nlambda = 1\na = 10\nnu = 50\nn_kernel = 128\nn_sim = 256\n";
  } else if (name == "ac4") {
    os << "kind = kernel\nlambda = 1\na = 10\nnu = 50\nn_kernel = 64\nn_sim = 256\n";
  } else if (name == "ac5") {
    os << "kind = transform\nlambda = 1\na = 10\nnu = 50\nn_kernel = 64\nn_sim = 256\n"
       << "basis = 256\n";
  } else if (name == "ac6") {
    os << "kind = simulate\nlambda = 1\na = 10\nnu = 50\nn_kernel = 64\nn_sim = 256\n"
       << "basis = 256\ngrid = 256\nnonlinear = false\namplitude = 1e-3\ninit_modes = 1\n"
       << "t_final = 0.05\ndt = 2e-5\n";
  } else if (name == "ac7" || name == "headline") {
    os << "kind = simulate\nlambda = 45\na = 400\nnu = 0\nn_kernel = 64\nn_sim = 256\n"
       << "basis = 256\ngrid = 256\nnonlinear = true\namplitude = 1e-2\ninit_modes = 1,2\n"
       << "t_final = 0.02\ndt = 2e-5\n";
  } else if (name == "ac8") {
    os << "kind = diagnose\nlambda = " << lambda_critical << "\ngram_modes = 2\n";
  } else if (name == "ac9") {
    os << "kind = solver_check\nlambda = 1\n";
  } else {
    throw SchemaError("unknown preset '" + name + "'");
  }
  return os.str();
}

struct RunResult {
  int exit_code = 0;
  std::string error_category;  // single-line machine-parseable summary
  std::vector<std::string> artifacts;
};

namespace detail {

class ArtifactWriter {
public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write_text(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw SchemaError("cannot write artifact '" + name + "'");
    out << content;
    if (!out) throw SchemaError("failed writing artifact '" + name + "'");
    record(name, content);
  }

  void write_json(const std::string& name, const nlohmann::json& j) {
    write_text(name, j.dump(2) + "\n");
  }

  /// Records a file written directly to disk (binary dumps, CSV).
  void record_file(const std::string& name) {
    std::ifstream in(dir_ / name, std::ios::binary);
    if (!in) throw SchemaError("artifact '" + name + "' missing after write");
    std::stringstream ss;
    ss << in.rdbuf();
    record(name, ss.str());
  }

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  nlohmann::json manifest() const {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : entries_) {
      char hex[32];
      std::snprintf(hex, sizeof(hex), "%016llx",
                    static_cast<unsigned long long>(e.hash));
      files.push_back({{"path", e.name}, {"bytes", e.bytes}, {"fnv1a64", std::string(hex)}});
    }
    return nlohmann::json{{"files", files}};
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

private:
  struct Entry {
    std::string name;
    std::size_t bytes;
    std::uint64_t hash;
  };

  void record(const std::string& name, const std::string& content) {
    entries_.push_back({name, content.size(), fnv1a64(content)});
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.name < b.name; });
  }

  std::filesystem::path dir_;
  std::vector<Entry> entries_;
};

inline nlohmann::json validation_to_json(const ValidationReport& rep) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return nlohmann::json{{"checks", checks},
                        {"all_passed", rep.all_passed},
                        {"margin", rep.margin},
                        {"max_mu", rep.max_mu_value},
                        {"max_mu_index", rep.max_mu_index},
                        {"nu_effective", rep.nu_effective}};
}

inline nlohmann::json config_echo(const ExperimentConfig& cfg, std::uint64_t seed) {
  return nlohmann::json{{"kind", cfg.kind},
                        {"params", params_to_json(cfg.params)},
                        {"grid", cfg.effective_grid()},
                        {"basis", cfg.effective_basis()},
                        {"scheme", cfg.scheme},
                        {"nonlinear", cfg.nonlinear},
                        {"amplitude", cfg.amplitude},
                        {"init_modes", cfg.init_modes},
                        {"seed", seed}};
}

inline StateField initial_state(const ExperimentConfig& cfg) {
  const int max_mode = *std::max_element(cfg.init_modes.begin(), cfg.init_modes.end());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(std::max(max_mode, cfg.params.n_kernel));
  for (int m : cfg.init_modes) {
    if (m < 1) throw SchemaError("init_modes entries must be >= 1");
    c(m - 1) = 1.0;
  }
  c *= cfg.amplitude / c.norm();
  return StateField::modal(std::move(c));
}

inline int run_simulate(const ExperimentConfig& cfg, ArtifactWriter& w, std::uint64_t seed) {
  const KernelModel model = assemble_kernel(cfg.params);
  const TransformOperator op = assemble_transform(model, cfg.effective_basis());
  const FeedbackLaw law = make_feedback_law(feedback_gain(model), op);
  const double nu = effective_nu(cfg.params);

  SimulateOptions opts;
  opts.sample_every = cfg.sample_every;
  opts.max_retries = cfg.retries;
  const SimulationTrace tr =
      simulate_closed_loop(initial_state(cfg), law, cfg.params, cfg.solver_config(), opts);
  write_trace_csv(tr, w.path("trace.csv").string());
  w.record_file("trace.csv");

  const DecayReport decay = verify_transform_decay(tr, nu);
  nlohmann::json summary = config_echo(cfg, seed);
  summary["nu"] = nu;
  summary["fitted_rate"] = decay.fitted_rate;
  summary["max_envelope_ratio"] = decay.max_ratio;
  summary["C_empirical"] = decay.c_empirical;
  summary["diverged"] = tr.diverged;
  w.write_json("summary.json", summary);
  w.write_text("decay.svg", render_trace_svg(tr, nu));
  return tr.diverged ? 3 : 0;
}

inline int run_kernel(const ExperimentConfig& cfg, ArtifactWriter& w, std::uint64_t seed) {
  const KernelModel model = assemble_kernel(cfg.params);
  w.write_json("kernel.json", kernel_to_json(model));

  nlohmann::json report = config_echo(cfg, seed);
  const auto rho = separable_test_function(Poly1D::bernstein(3, 3), Poly1D::bernstein(2, 3),
                                           "x^3(1-x)^3 y^2(1-y)^3");
  const QuadratureRule cal = gauss_legendre(64);
  const double calibration =
      cfg.params.a * cal.integrate([&](double x) { return rho.value(x, x); });
  report["weak_residual_calibration"] = calibration;

  if (cfg.weak_sweep) {
    nlohmann::json sweep = nlohmann::json::array();
    for (int N : {16, 32, 64, 128}) {
      if (N > cfg.params.n_kernel) break;
      Parameters p = cfg.params;
      p.n_kernel = N;
      const KernelModel m = assemble_kernel(p);
      sweep.push_back({{"N", N}, {"residual", weak_residual(m, rho)}});
    }
    report["weak_residual_sweep"] = sweep;
  } else {
    report["weak_residual"] = weak_residual(model, rho);
  }

  const TraceReport traces = boundary_trace_check(model);
  report["boundary_traces"] = {{"constraint_projection_norm", traces.constraint_projection_norm},
                               {"constraint_tail_norm", traces.constraint_tail_norm},
                               {"max_row_dd_at_1", traces.max_row_dd_at_1},
                               {"max_kyy_trace", traces.max_kyy_trace}};
  report["closed_form_validated"] = model.closed_form_validated;
  report["closed_form_max_rel_err"] = model.closed_form_max_rel_err;
  report["coefficient_residual"] = model.coefficient_residual;

  // Asymptotics envelopes (fitted constants, informational).
  double c_dev = 0.0, r1_dev = 0.0, r4_dev = 0.0;
  for (int j = 1; j <= model.N; ++j) {
    c_dev = std::max(c_dev, std::abs(model.c(j - 1) - 1.0) * std::pow(double(j), 3) /
                                (1.0 + std::log(double(j))));
    const auto& r = model.modes[j - 1].roots;
    r1_dev = std::max(r1_dev, std::abs(r.r1 - j * kPi + cfg.params.lambda / (2.0 * j * kPi)) *
                                  std::pow(double(j), 3));
    r4_dev = std::max(r4_dev,
                      std::abs(r.i_r4() - (j * kPi - cfg.params.a / (4.0 * std::pow(j * kPi, 3)))) *
                          std::pow(double(j), 5));
  }
  report["asymptotics"] = {{"c_envelope_constant", c_dev},
                           {"r1_envelope_constant", r1_dev},
                           {"i_r4_envelope_constant", r4_dev}};
  w.write_json("kernel_report.json", report);
  return 0;
}

inline int run_transform(const ExperimentConfig& cfg, ArtifactWriter& w, std::uint64_t seed) {
  const KernelModel model = assemble_kernel(cfg.params);
  const TransformOperator op = assemble_transform(model, cfg.effective_basis());
  write_matrix_dump(op, w.path("operator.bin").string());
  w.record_file("operator.bin");

  const auto est = spectral_radius_estimate(op, cfg.m_powers);
  nlohmann::json report = config_echo(cfg, seed);
  report["M"] = op.M;
  report["N"] = op.N;
  report["operator_norm"] = op.operator_norm;
  report["min_singular_value_ImK"] = op.min_singular_value;
  report["max_singular_value_ImK"] = op.max_singular_value;
  report["inverse_norm_estimate"] = 1.0 / op.min_singular_value;
  report["spectral_radius"] = {{"power_norm", est.power_norm},
                               {"m_powers", cfg.m_powers},
                               {"max_abs_eig", est.max_abs_eig}};
  w.write_json("transform_report.json", report);
  return 0;
}

inline int run_diagnose(const ExperimentConfig& cfg, ArtifactWriter& w, std::uint64_t seed) {
  const double lambda = cfg.params.lambda;
  nlohmann::json report = config_echo(cfg, seed);
  const double dist = dist_to_critical_lambda(lambda, critical_lambda_window(lambda));
  const bool critical = dist <= cfg.params.eps_critical;
  report["dist_to_critical_lambda"] = dist;
  report["lambda_critical"] = critical;

  const int modes = cfg.gram_modes;
  const double mu1 = eigenvalue(1, lambda);
  const double mu_last = eigenvalue(modes, lambda);
  const double T = cfg.gram_horizon > 0.0
                       ? cfg.gram_horizon
                       : std::min(1.0, 50.0 / std::max({std::abs(2 * mu1),
                                                        std::abs(2 * mu_last), 1.0}));
  report["gram"] = {{"modes", modes},
                    {"horizon", T},
                    {"min_eig", observability_gram_min_eig(lambda, modes, T)},
                    {"normalized_min_eig",
                     observability_gram_normalized_min_eig(lambda, modes, std::min(T, 1.0))}};

  // Explicit null solution when lambda sits on the critical set.
  std::vector<double> times;
  for (int i = 0; i <= 200; ++i) times.push_back(i * T / 200.0);
  if (critical) {
    // locate the (j0, k0) pair
    int j0 = 1, k0 = 2;
    double best = 1e300;
    const int wnd = critical_lambda_window(lambda);
    for (int j = 1; j < wnd; ++j)
      for (int k = j + 1; k <= wnd; ++k) {
        const double d = std::abs(lambda - (double(j) * j + double(k) * k) * kPi * kPi);
        if (d < best) {
          best = d;
          j0 = j;
          k0 = k;
        }
      }
    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(k0);
    z0(j0 - 1) = 1.0;
    z0(k0 - 1) = -double(j0) / k0;
    const auto sig = adjoint_boundary_signal(z0, lambda, times);
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double scale =
          std::sqrt(2.0) * kPi *
          (j0 * std::exp(eigenvalue(j0, lambda) * times[i]) +
           j0 * std::exp(eigenvalue(k0, lambda) * times[i]));
      worst_rel = std::max(worst_rel, std::abs(sig[i]) / scale);
    }
    report["null_solution"] = {{"j0", j0}, {"k0", k0}, {"max_relative_trace", worst_rel}};
    w.write_text("adjoint.svg", render_signal_svg(times, sig, "z_x(t,0) of the null solution"));
  } else {
    Eigen::VectorXd z0 = Eigen::VectorXd::Unit(1, 0);
    const auto sig = adjoint_boundary_signal(z0, lambda, times);
    w.write_text("adjoint.svg", render_signal_svg(times, sig, "z_x(t,0), z0 = phi_1"));
  }

  // b function (skipped when the closed form degenerates).
  try {
    const auto b = b_function(lambda, cfg.params.eps_critical);
    const Eigen::VectorXd bj = b.sine_coefficients(32);
    double min_abs = 1e300;
    for (int j = 0; j < 32; ++j) min_abs = std::min(min_abs, std::abs(bj(j)));
    report["b_function"] = {{"min_abs_coefficient", min_abs}};
  } catch (const DegenerateBoundaryProfile& e) {
    report["b_function"] = {{"degenerate", true}, {"reason", e.what()}};
  }

  // Overdetermined eigenproblem scan at +-(j^4 pi^4 - lambda j^2 pi^2).
  std::vector<std::complex<double>> mu_grid;
  for (int j = 1; j <= 3; ++j) {
    const double m = std::pow(j * kPi, 4) - lambda * std::pow(j * kPi, 2);
    mu_grid.push_back({m, 0.0});
    mu_grid.push_back({-m, 0.0});
  }
  mu_grid.push_back({17.3, 0.0});
  const auto over = eigenproblem_overdetermined_check(lambda, mu_grid);
  nlohmann::json scan = nlohmann::json::array();
  for (std::size_t i = 0; i < over.mu_values.size(); ++i)
    scan.push_back({{"mu_re", over.mu_values[i].real()},
                    {"sigma_min", over.smallest_singular_values[i]}});
  report["overdetermined_scan"] = scan;

  // Seeded random non-critical sample: 2-mode Gram determinant positivity.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unif(0.5, 250.0);
  int positive = 0, tried = 0;
  while (tried < 20) {
    const double l = unif(rng);
    if (dist_to_critical_lambda(l, critical_lambda_window(l)) < 0.1) continue;
    ++tried;
    const double m1 = eigenvalue(1, l), m2 = eigenvalue(2, l);
    const double Tl = std::min(1.0, 50.0 / std::max({std::abs(2 * m1), std::abs(2 * m2), 1.0}));
    if (observability_gram_min_eig(l, 2, Tl) > 0.0) ++positive;
  }
  report["random_noncritical_gram"] = {{"samples", tried}, {"positive_definite", positive}};

  w.write_json("diagnostics.json", report);
  return 0;
}

inline int run_solver_check(const ExperimentConfig& cfg, ArtifactWriter& w, std::uint64_t seed) {
  nlohmann::json report = config_echo(cfg, seed);
  const auto mo = manufactured_solution_study(cfg.params.lambda);
  report["manufactured"] = {{"diff_coarse", mo.diff_coarse},
                            {"diff_fine", mo.diff_fine},
                            {"observed_order", mo.observed_order},
                            {"final_error", mo.final_error}};
  const auto lift = lift_boundary_study();
  report["lift"] = {{"grids", lift.grids}, {"errors", lift.errors}, {"order", lift.order}};
  const auto energy = energy_identity_study(cfg.params.lambda);
  report["energy_identity"] = {{"residual", energy.residual},
                               {"scale", energy.scale},
                               {"relative", energy.relative}};
  const auto conv = grid_convergence_study();
  report["grid_convergence"] = {{"err_coarse", conv.err_coarse},
                                {"err_fine", conv.err_fine},
                                {"reduction", conv.reduction}};
  w.write_json("solver_report.json", report);
  return 0;
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                std::uint64_t seed = 0, int jobs = 1);

namespace detail {

inline int run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, ArtifactWriter& w,
                     std::uint64_t seed, int jobs) {
  if (cfg.sweep_param.empty() || cfg.sweep_values.empty())
    throw SchemaError("sweep requires sweep_param and sweep_values");
  std::vector<int> codes(cfg.sweep_values.size(), 0);
  std::vector<std::string> dirs(cfg.sweep_values.size());
  const int workers = std::max(1, std::min<int>(jobs, cfg.sweep_values.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.sweep_values.size()) return;
      ExperimentConfig sub = cfg;
      sub.kind = "simulate";
      const double v = cfg.sweep_values[i];
      if (cfg.sweep_param == "lambda") sub.params.lambda = v;
      if (cfg.sweep_param == "a") sub.params.a = v;
      if (cfg.sweep_param == "nu") sub.params.nu = v;
      if (cfg.sweep_param == "amplitude") sub.amplitude = v;
      std::ostringstream dir;
      dir.precision(12);
      dir << out_dir << "/" << cfg.sweep_param << "_" << v;
      dirs[i] = dir.str();
      const RunResult r = run_experiment(sub, dirs[i], seed, 1);
      codes[i] = r.exit_code;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  nlohmann::json summary = config_echo(cfg, seed);
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i)
    runs.push_back({{"value", cfg.sweep_values[i]},
                    {"dir", dirs[i]},
                    {"exit_code", codes[i]}});
  summary["runs"] = runs;
  w.write_json("sweep_summary.json", summary);
  for (int c : codes)
    if (c != 0) return c;
  return 0;
}

}  // namespace detail

/// Dispatches one experiment; writes every artifact plus a manifest with
/// content hashes into out_dir. Deterministic given (config, seed).
inline RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                std::uint64_t seed, int jobs) {
  RunResult result;
  detail::ArtifactWriter writer(out_dir);
  try {
    // Every kind except the pure diagnostics requires admissible parameters.
    const ValidationReport rep = validate(cfg.params);
    writer.write_json("validation.json", detail::validation_to_json(rep));
    const bool needs_admissible =
        (cfg.kind == "kernel" || cfg.kind == "transform" || cfg.kind == "simulate" ||
         cfg.kind == "sweep");
    if (cfg.kind == "validate") {
      result.exit_code = rep.all_passed ? 0 : 2;
      if (!rep.all_passed) {
        for (const auto& c : rep.checks)
          if (!c.passed) {
            result.error_category = "parameter-rejection: " + c.name;
            break;
          }
      }
    } else if (needs_admissible && !rep.all_passed) {
      result.exit_code = 2;
      for (const auto& c : rep.checks)
        if (!c.passed) {
          result.error_category = "parameter-rejection: " + c.name;
          break;
        }
    } else if (cfg.kind == "kernel") {
      result.exit_code = detail::run_kernel(cfg, writer, seed);
    } else if (cfg.kind == "transform") {
      result.exit_code = detail::run_transform(cfg, writer, seed);
    } else if (cfg.kind == "simulate") {
      result.exit_code = detail::run_simulate(cfg, writer, seed);
      if (result.exit_code == 3) result.error_category = "numerical-failure: diverged";
    } else if (cfg.kind == "diagnose") {
      result.exit_code = detail::run_diagnose(cfg, writer, seed);
    } else if (cfg.kind == "solver_check") {
      result.exit_code = detail::run_solver_check(cfg, writer, seed);
    } else if (cfg.kind == "sweep") {
      result.exit_code = detail::run_sweep(cfg, out_dir, writer, seed, jobs);
      if (result.exit_code == 3) result.error_category = "numerical-failure: sweep member";
    }
  } catch (const ParameterRejected& e) {
    result.exit_code = 2;
    result.error_category = std::string("parameter-rejection: ") + e.what();
  } catch (const SchemaError& e) {
    result.exit_code = 4;
    result.error_category = std::string("schema-error: ") + e.what();
  } catch (const KsError& e) {
    result.exit_code = 3;
    result.error_category = std::string("numerical-failure: ") + e.what();
  }
  writer.write_json("manifest.json", writer.manifest());
  result.artifacts = writer.names();
  return result;
}

}  // namespace ksrapid
