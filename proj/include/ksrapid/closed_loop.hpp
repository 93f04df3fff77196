#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ksrapid/errors.hpp"
#include "ksrapid/fredholm_transform.hpp"
#include "ksrapid/kernel_synthesis.hpp"
#include "ksrapid/ks_solver.hpp"
#include "ksrapid/sine_basis.hpp"

namespace ksrapid {

/// Feedback law F(v) = <g, v> with g = k_xx(0, .), plus the transform used
/// for monitoring the damped state w = (I - K) v.
struct FeedbackLaw {
  Eigen::VectorXd gain_coeffs;        // orthonormal sine coefficients of g
  const TransformOperator* transform = nullptr;

  double eval_modal(const Eigen::VectorXd& coeffs) const {
    const int m = std::min<int>(gain_coeffs.size(), coeffs.size());
    return gain_coeffs.head(m).dot(coeffs.head(m));
  }
};

inline FeedbackLaw make_feedback_law(const FeedbackGain& gain, const TransformOperator& op) {
  return FeedbackLaw{gain.coeffs, &op};
}

inline double feedback_eval(const FeedbackLaw& law, const StateField& v) {
  if (v.rep == StateField::Rep::Modal) return law.eval_modal(v.data);
  return law.eval_modal(grid_to_modal(v.data, std::min<int>(v.data.size(),
                                                            law.gain_coeffs.size())));
}

/// Q(v) = int |v''|^2 - lambda int |v'|^2 + a int |v|^2, evaluated through
/// sine coefficients where it is exact on modes: Q(phi_j) = a - mu_j.
inline double lyapunov_Q(const StateField& v, const Parameters& p) {
  const Eigen::VectorXd c = (v.rep == StateField::Rep::Modal)
                                ? v.data
                                : grid_to_modal(v.data, static_cast<int>(v.data.size()));
  double q = 0.0;
  for (int j = 1; j <= c.size(); ++j) {
    const double jp2 = (j * kPi) * (j * kPi);
    q += (jp2 * jp2 - p.lambda * jp2 + p.a) * c(j - 1) * c(j - 1);
  }
  return q;
}

struct EnvelopeFit {
  double rate = 0.0;       // fitted slope of log ||w|| vs t (negative = decay)
  double intercept = 0.0;
  double max_relative_excess = 0.0;  // max_t ||w||/(e^{-nu t} ||w0||) - 1
};

struct SimulationTrace {
  std::vector<double> times;
  std::vector<double> norm_v;
  std::vector<double> norm_w;
  std::vector<double> feedback;
  EnvelopeFit envelope_fit;
  bool diverged = false;
};

struct SimulateOptions {
  int sample_every = 10;
  bool throw_on_divergence = false;
  int max_retries = 0;  // halve the initial amplitude on divergence
};

namespace detail {

inline EnvelopeFit fit_envelope(const SimulationTrace& tr, double nu) {
  EnvelopeFit fit;
  if (tr.times.size() < 2 || tr.norm_w.empty() || tr.norm_w.front() <= 0.0) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  const double w0 = tr.norm_w.front();
  double max_ratio = 0.0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double w = tr.norm_w[i];
    max_ratio = std::max(max_ratio, w / (std::exp(-nu * tr.times[i]) * w0));
    if (w <= 0.0) continue;
    const double X = tr.times[i], Y = std::log(w);
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++n;
  }
  if (n >= 2) {
    fit.rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.rate * sx) / n;
  }
  fit.max_relative_excess = max_ratio - 1.0;
  return fit;
}

}  // namespace detail

/// Runs the nonlinear (or linearized) closed loop v_xx(t,0) = F(v(t,.)) and
/// records ||v||, ||(I-K) v|| and the feedback signal.
inline SimulationTrace simulate_closed_loop(const StateField& v0, const FeedbackLaw& law,
                                            const Parameters& params, const SolverConfig& cfg,
                                            const SimulateOptions& opts = {}) {
  const auto rep = validate(params);
  if (!rep.all_passed)
    throw ParameterRejected("simulate_closed_loop: inadmissible parameters:\n" + rep.summary());
  if (law.transform == nullptr) throw DimensionMismatch("feedback law has no transform attached");
  const TransformOperator& op = *law.transform;
  const int n = cfg.grid_size;
  if (op.M > n)
    throw DimensionMismatch("transform basis (" + std::to_string(op.M) +
                            ") exceeds grid resolution (" + std::to_string(n) + ")");
  const double nu = effective_nu(params);

  // Grid-sampled gain: F(v) = h * sum_i g(x_i) v_i, exact for band-limited
  // states because the gain holds modes <= N < Nyquist.
  Eigen::VectorXd gain_grid = modal_to_grid(law.gain_coeffs, n);
  const double h = 1.0 / (n + 1);
  BoundaryData feedback{[gain_grid, h](double, const Eigen::VectorXd& u) {
    return h * gain_grid.dot(u);
  }};

  const Eigen::MatrixXd S = sine_matrix(op.M, n);  // modal projection cache
  const double modal_scale = std::sqrt(2.0) * h;

  double amplitude_scale = 1.0;
  for (int attempt = 0;; ++attempt) {
    GridSolver solver(params.lambda, cfg);
    Eigen::VectorXd u = amplitude_scale * v0.grid_values(n);
    SimulationTrace tr;
    auto sample = [&](double t, double f) {
      const Eigen::VectorXd coeffs = modal_scale * (S * u);
      tr.times.push_back(t);
      tr.norm_v.push_back(coeffs.norm());
      tr.norm_w.push_back(op.apply_i_minus_k(coeffs).norm());
      tr.feedback.push_back(f);
    };

    const int steps = static_cast<int>(std::round(params.t_final / cfg.dt));
    double t = 0.0;
    bool diverged = false;
    sample(0.0, feedback.source(0.0, u));
    try {
      for (int s = 1; s <= steps; ++s) {
        const auto r = solver.advance(u, t, feedback);
        u = r.u;
        t += cfg.dt;
        if (s % opts.sample_every == 0 || s == steps) sample(t, feedback.source(t, u));
      }
    } catch (const DivergedStep&) {
      diverged = true;
    }
    tr.diverged = diverged;
    tr.envelope_fit = detail::fit_envelope(tr, nu);
    if (diverged && attempt < opts.max_retries) {
      amplitude_scale *= 0.5;
      continue;
    }
    if (diverged && opts.throw_on_divergence)
      throw DivergedStep("closed-loop simulation diverged at t = " +
                         std::to_string(tr.times.back()));
    return tr;
  }
}

struct DecayReport {
  double max_ratio = 0.0;    // max_t ||w(t)|| / (e^{-nu t} ||w(0)||)
  double fitted_rate = 0.0;  // decay rate from the log-linear fit (positive = decay)
  double c_empirical = 0.0;  // max_t ||v(t)|| / (e^{-nu t} ||v(0)||)
};

inline DecayReport verify_transform_decay(const SimulationTrace& tr, double nu) {
  if (tr.times.empty()) throw DimensionMismatch("verify_transform_decay: empty trace");
  DecayReport rep;
  const double w0 = tr.norm_w.front();
  const double v0 = tr.norm_v.front();
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double env = std::exp(-nu * tr.times[i]);
    if (w0 > 0.0) rep.max_ratio = std::max(rep.max_ratio, tr.norm_w[i] / (env * w0));
    if (v0 > 0.0) rep.c_empirical = std::max(rep.c_empirical, tr.norm_v[i] / (env * v0));
  }
  rep.fitted_rate = -detail::fit_envelope(tr, nu).rate;
  return rep;
}

inline void write_trace_csv(const SimulationTrace& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open '" + path + "' for writing");
  out << "t,norm_v,norm_w,feedback\n";
  char buf[128];
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", tr.times[i], tr.norm_v[i],
                  tr.norm_w[i], tr.feedback[i]);
    out << buf;
  }
  if (!out) throw SchemaError("failed writing '" + path + "'");
}

}  // namespace ksrapid
