#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <string>

#include "ksrapid/fredholm_transform.hpp"
#include "ksrapid/kernel_synthesis.hpp"

namespace ksrapid {

// JSON document schema "ksrapid-kernel" v1. Doubles go through nlohmann's
// shortest-round-trip serializer, so parse(dump(x)) is bit-exact.

inline nlohmann::json params_to_json(const Parameters& p) {
  return nlohmann::json{{"lambda", p.lambda},   {"a", p.a},
                        {"nu", p.nu},           {"n_kernel", p.n_kernel},
                        {"n_sim", p.n_sim},     {"eps_critical", p.eps_critical},
                        {"t_final", p.t_final}, {"dt", p.dt}};
}

inline Parameters params_from_json(const nlohmann::json& j) {
  Parameters p;
  p.lambda = j.at("lambda").get<double>();
  p.a = j.at("a").get<double>();
  p.nu = j.at("nu").get<double>();
  p.n_kernel = j.at("n_kernel").get<int>();
  p.n_sim = j.at("n_sim").get<int>();
  p.eps_critical = j.at("eps_critical").get<double>();
  p.t_final = j.at("t_final").get<double>();
  p.dt = j.at("dt").get<double>();
  return p;
}

inline nlohmann::json kernel_to_json(const KernelModel& model) {
  nlohmann::json j;
  j["format"] = "ksrapid-kernel";
  j["version"] = 1;
  j["params"] = params_to_json(model.params);
  j["N"] = model.N;
  j["coefficient_residual"] = model.coefficient_residual;
  j["closed_form_validated"] = model.closed_form_validated;
  j["closed_form_max_rel_err"] = model.closed_form_max_rel_err;
  j["c"] = nlohmann::json::array();
  for (int i = 0; i < model.c.size(); ++i) j["c"].push_back(model.c(i));
  j["modes"] = nlohmann::json::array();
  for (const auto& m : model.modes) {
    nlohmann::json jm;
    jm["j"] = m.j;
    jm["r1"] = {m.roots.r1.real(), m.roots.r1.imag()};
    jm["r3"] = {m.roots.r3.real(), m.roots.r3.imag()};
    jm["alpha"] = {{m.alpha1.real(), m.alpha1.imag()},
                   {m.alpha2.real(), m.alpha2.imag()},
                   {m.alpha3.real(), m.alpha3.imag()},
                   {m.alpha4.real(), m.alpha4.imag()}};
    j["modes"].push_back(jm);
  }
  return j;
}

inline KernelModel kernel_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ksrapid-kernel" || j.value("version", 0) != 1)
    throw SchemaError("not a ksrapid-kernel v1 document");
  KernelModel model;
  model.params = params_from_json(j.at("params"));
  model.N = j.at("N").get<int>();
  model.coefficient_residual = j.at("coefficient_residual").get<double>();
  model.closed_form_validated = j.at("closed_form_validated").get<bool>();
  model.closed_form_max_rel_err = j.at("closed_form_max_rel_err").get<double>();
  const auto& jc = j.at("c");
  model.c.resize(jc.size());
  for (std::size_t i = 0; i < jc.size(); ++i) model.c(i) = jc[i].get<double>();
  for (const auto& jm : j.at("modes")) {
    const int mode_j = jm.at("j").get<int>();
    // Re-derive the scaled-evaluation helpers from the parameters; the
    // stored roots/alphas are authoritative for the serialized values.
    ModeShape m = mode_shape(mode_j, model.params.lambda, model.params.a,
                             model.params.eps_critical);
    m.roots.r1 = cd(jm.at("r1")[0].get<double>(), jm.at("r1")[1].get<double>());
    m.roots.r3 = cd(jm.at("r3")[0].get<double>(), jm.at("r3")[1].get<double>());
    const auto& al = jm.at("alpha");
    m.alpha1 = cd(al[0][0].get<double>(), al[0][1].get<double>());
    m.alpha2 = cd(al[1][0].get<double>(), al[1][1].get<double>());
    m.alpha3 = cd(al[2][0].get<double>(), al[2][1].get<double>());
    m.alpha4 = cd(al[3][0].get<double>(), al[3][1].get<double>());
    model.modes.push_back(m);
  }
  if (static_cast<int>(model.modes.size()) != model.N || model.c.size() != model.N)
    throw SchemaError("kernel document is internally inconsistent");
  return model;
}

// Binary operator dump: 16-byte header (magic "KSKN", u32 M, u32 N, u32
// reserved = 0), then the M x M matrix row-major as little-endian float64.
inline void write_matrix_dump(const TransformOperator& op, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot open '" + path + "' for writing");
  const char magic[4] = {'K', 'S', 'K', 'N'};
  const std::uint32_t M = static_cast<std::uint32_t>(op.M);
  const std::uint32_t N = static_cast<std::uint32_t>(op.N);
  const std::uint32_t reserved = 0;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&M), 4);
  out.write(reinterpret_cast<const char*>(&N), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  for (int r = 0; r < op.M; ++r)
    for (int c = 0; c < op.M; ++c) {
      const double v = op.matrix(r, c);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!out) throw SchemaError("failed writing matrix dump to '" + path + "'");
}

struct MatrixDump {
  std::uint32_t M = 0;
  std::uint32_t N = 0;
  Eigen::MatrixXd matrix;
};

inline MatrixDump read_matrix_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || magic[0] != 'K' || magic[1] != 'S' || magic[2] != 'K' || magic[3] != 'N')
    throw SchemaError("bad magic in '" + path + "'");
  MatrixDump d;
  std::uint32_t reserved = 0;
  in.read(reinterpret_cast<char*>(&d.M), 4);
  in.read(reinterpret_cast<char*>(&d.N), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  d.matrix.resize(d.M, d.M);
  for (std::uint32_t r = 0; r < d.M; ++r)
    for (std::uint32_t c = 0; c < d.M; ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      d.matrix(r, c) = v;
    }
  if (!in) throw SchemaError("truncated matrix dump '" + path + "'");
  return d;
}

}  // namespace ksrapid
