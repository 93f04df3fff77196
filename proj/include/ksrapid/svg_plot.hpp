#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ksrapid/closed_loop.hpp"
#include "ksrapid/errors.hpp"

namespace ksrapid {

namespace svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> t;
  std::vector<double> y;  // plotted on a log10 axis
};

inline std::string format_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Semi-log plot as plain-text SVG. No timestamps or other run metadata, so
// byte-identical reruns produce byte-identical files.
inline std::string render_semilog(const std::vector<Series>& series, const std::string& x_label,
                                  const std::string& y_label) {
  const double W = 800, H = 500, ml = 70, mr = 20, mt = 20, mb = 50;
  double t0 = 1e300, t1 = -1e300, ly0 = 1e300, ly1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      if (s.y[i] <= 0.0) continue;
      t0 = std::min(t0, s.t[i]);
      t1 = std::max(t1, s.t[i]);
      ly0 = std::min(ly0, std::log10(s.y[i]));
      ly1 = std::max(ly1, std::log10(s.y[i]));
    }
  if (t1 <= t0 || ly1 <= ly0) {
    t1 = t0 + 1.0;
    ly1 = ly0 + 1.0;
  }
  auto X = [&](double t) { return ml + (t - t0) / (t1 - t0) * (W - ml - mr); };
  auto Y = [&](double y) {
    return H - mb - (std::log10(y) - ly0) / (ly1 - ly0) * (H - mt - mb);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
     << H - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double t = t0 + (t1 - t0) * i / 5.0;
    os << "<text x=\"" << X(t) << "\" y=\"" << H - mb + 18
       << "\" font-size=\"12\" text-anchor=\"middle\">" << format_num(t) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double ly = ly0 + (ly1 - ly0) * i / 5.0;
    os << "<text x=\"" << ml - 8 << "\" y=\"" << H - mb - (H - mt - mb) * i / 5.0 + 4
       << "\" font-size=\"12\" text-anchor=\"end\">1e" << format_num(ly) << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
     << "\" font-size=\"13\" text-anchor=\"middle\">" << x_label << "</text>\n";
  os << "<text x=\"14\" y=\"" << (mt + H - mb) / 2
     << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << (mt + H - mb) / 2 << ")\">" << y_label << "</text>\n";

  double legend_y = mt + 16;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      if (s.y[i] <= 0.0) continue;
      os << format_num(X(s.t[i])) << "," << format_num(Y(s.y[i])) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - mr - 180 << "\" y=\"" << legend_y << "\" font-size=\"13\" fill=\""
       << s.color << "\">" << s.label << "</text>\n";
    legend_y += 18;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace svg

/// Semi-log decay plot of a simulation trace with the e^{-nu t} envelope.
inline std::string render_trace_svg(const SimulationTrace& tr, double nu) {
  if (tr.times.size() < 2) throw SchemaError("trace has fewer than two samples");
  svg::Series sv{"|v(t)|", "#1f77b4", tr.times, tr.norm_v};
  svg::Series sw{"|(I-K)v(t)|", "#d62728", tr.times, tr.norm_w};
  svg::Series env{"envelope e^{-nu t}|w0|", "#2ca02c", tr.times, {}};
  env.y.reserve(tr.times.size());
  const double w0 = tr.norm_w.empty() ? 1.0 : tr.norm_w.front();
  for (double t : tr.times) env.y.push_back(w0 * std::exp(-nu * t));
  return svg::render_semilog({sv, sw, env}, "t", "L2 norm (log scale)");
}

/// Boundary-observation plot for the controllability diagnostics.
inline std::string render_signal_svg(const std::vector<double>& times,
                                     const std::vector<double>& signal,
                                     const std::string& label) {
  if (times.size() < 2 || times.size() != signal.size())
    throw SchemaError("signal series malformed");
  svg::Series s{label, "#1f77b4", times, {}};
  s.y.reserve(signal.size());
  for (double v : signal) s.y.push_back(std::max(std::abs(v), 1e-300));
  return svg::render_semilog({s}, "t", "|" + label + "| (log scale)");
}

/// Parses a trace CSV back (schema: t,norm_v,norm_w,feedback) and renders
/// the decay plot; SchemaError on malformed input.
inline std::string plot_trace_csv(const std::string& csv_path, double nu) {
  std::ifstream in(csv_path);
  if (!in) throw SchemaError("cannot open '" + csv_path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "t,norm_v,norm_w,feedback")
    throw SchemaError("'" + csv_path + "' is not a trace CSV (bad header)");
  SimulationTrace tr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, nv, nw, f;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &nv, &nw, &f) != 4)
      throw SchemaError("malformed trace row: '" + line + "'");
    tr.times.push_back(t);
    tr.norm_v.push_back(nv);
    tr.norm_w.push_back(nw);
    tr.feedback.push_back(f);
  }
  if (tr.times.size() < 2) throw SchemaError("trace CSV has fewer than two rows");
  return render_trace_svg(tr, nu);
}

}  // namespace ksrapid
