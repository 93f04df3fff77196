#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ksrapid/kernel_io.hpp"
#include "ksrapid/ks_solver.hpp"

namespace ksrapid {

namespace detail {

inline const char* base64_alphabet() {
  return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(const unsigned char* data, std::size_t len) {
  const char* tbl = base64_alphabet();
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    std::uint32_t v = data[i] << 16;
    if (i + 1 < len) v |= data[i + 1] << 8;
    if (i + 2 < len) v |= data[i + 2];
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(i + 1 < len ? tbl[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < len ? tbl[v & 63] : '=');
  }
  return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& s) {
  int rev[256];
  std::memset(rev, -1, sizeof(rev));
  const char* tbl = base64_alphabet();
  for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(tbl[i])] = i;
  std::vector<unsigned char> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : s) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = rev[static_cast<unsigned char>(c)];
    if (v < 0) throw SchemaError("invalid base64 payload");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace detail

struct Checkpoint {
  Parameters params;
  double time = 0.0;
  std::string scheme = "cn";
  StateField state = StateField::modal(Eigen::VectorXd());
};

/// Checkpoint document: JSON header with the field values embedded as a
/// base64 little-endian float64 payload (bit-exact round trip).
inline nlohmann::json checkpoint_to_json(const Checkpoint& cp) {
  nlohmann::json j;
  j["format"] = "ksrapid-checkpoint";
  j["version"] = 1;
  j["params"] = params_to_json(cp.params);
  j["time"] = cp.time;
  j["scheme"] = cp.scheme;
  j["rep"] = (cp.state.rep == StateField::Rep::Grid) ? "grid" : "modal";
  j["size"] = cp.state.data.size();
  j["data_base64"] = detail::base64_encode(
      reinterpret_cast<const unsigned char*>(cp.state.data.data()),
      static_cast<std::size_t>(cp.state.data.size()) * sizeof(double));
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ksrapid-checkpoint" || j.value("version", 0) != 1)
    throw SchemaError("not a ksrapid-checkpoint v1 document");
  Checkpoint cp;
  cp.params = params_from_json(j.at("params"));
  cp.time = j.at("time").get<double>();
  cp.scheme = j.at("scheme").get<std::string>();
  const auto bytes = detail::base64_decode(j.at("data_base64").get<std::string>());
  const std::size_t n = j.at("size").get<std::size_t>();
  if (bytes.size() != n * sizeof(double))
    throw SchemaError("checkpoint payload size mismatch");
  Eigen::VectorXd data(n);
  std::memcpy(data.data(), bytes.data(), bytes.size());
  cp.state = (j.at("rep").get<std::string>() == "grid") ? StateField::grid(std::move(data))
                                                        : StateField::modal(std::move(data));
  return cp;
}

inline void write_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open '" + path + "' for writing");
  out << checkpoint_to_json(cp).dump(2) << "\n";
  if (!out) throw SchemaError("failed writing checkpoint '" + path + "'");
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint parse error: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace ksrapid
