#pragma once

// JSON / CSV serialization of densities, maps, networks, traces and
// manifests. Every JSON document carries schema_version.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "coco/analytic.hpp"
#include "coco/designer.hpp"
#include "coco/errors.hpp"
#include "coco/geometry.hpp"
#include "coco/nn.hpp"
#include "coco/training.hpp"

namespace coco::io {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

inline void check_schema(const json &j, const std::string &what) {
  if (!j.contains("schema_version"))
    throw ConfigError(what + ": missing schema_version");
  if (j.at("schema_version").get<int>() != schema_version)
    throw ConfigError(what + ": unsupported schema_version " +
                      j.at("schema_version").dump());
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path &p, const std::string &s) {
  if (p.has_parent_path())
    std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write '" + p.string() + "'");
  out << s;
}

inline json read_json(const std::filesystem::path &p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error &e) {
    throw ConfigError("invalid JSON in '" + p.string() + "': " + e.what());
  }
}

inline void write_json(const std::filesystem::path &p, const json &j) {
  write_text(p, j.dump(2) + "\n");
}

/// Git blob object id: SHA-1 of "blob <size>\0<content>".
inline std::string git_blob_hash(const std::string &content) {
  std::string obj = "blob " + std::to_string(content.size());
  obj.push_back('\0');
  obj += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(obj.data(), obj.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw Error("SHA-1 digest failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i)
    ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

/// Round-trip decimal representation.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Map and density

inline json map_to_json(const ConformalMap &m) {
  json coeffs = json::array();
  for (int k = 0; k <= m.degree(); ++k)
    if (m.a(k) != cplx{})
      coeffs.push_back({k, m.a(k).real(), m.a(k).imag()});
  return {{"gamma", m.gamma()}, {"coeffs", coeffs}};
}

/// {gamma, coeffs: [[k, re, im], ...]}; k = 0 is the constant term.
inline ConformalMap map_from_json(const json &j) {
  try {
    std::vector<std::pair<int, cplx>> terms;
    for (const auto &t : j.at("coeffs")) {
      if (!t.is_array() || t.size() != 3)
        throw ConfigError("map coefficient must be [k, re, im]");
      terms.emplace_back(t[0].get<int>(),
                         cplx(t[1].get<double>(), t[2].get<double>()));
    }
    return make_map(j.at("gamma").get<double>(), terms);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("invalid map: ") + e.what());
  }
}

inline json density_to_json(const InterfaceDensity &d) {
  json pk = json::array();
  for (const auto &c : d.pk)
    pk.push_back({c.real(), c.imag()});
  return {{"schema_version", schema_version},
          {"gamma", d.gamma},
          {"n", d.order()},
          {"p0", d.p0},
          {"pk", pk}};
}

inline InterfaceDensity density_from_json(const json &j) {
  check_schema(j, "density");
  try {
    InterfaceDensity d;
    d.gamma = j.at("gamma").get<double>();
    d.p0 = j.at("p0").get<double>();
    for (const auto &c : j.at("pk"))
      d.pk.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    if (j.contains("n") && j.at("n").get<int>() != d.order())
      throw ConfigError("density: n does not match the length of pk");
    return d;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("invalid density: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Networks

inline json mlp_to_json(const nn::Mlp &net) {
  return {{"schema_version", schema_version},
          {"widths", net.widths()},
          {"activation", "tanh"},
          {"params", net.params()}};
}

inline nn::Mlp mlp_from_json(const json &j) {
  check_schema(j, "network");
  nn::Mlp net(j.at("widths").get<std::vector<int>>());
  const auto p = j.at("params").get<std::vector<double>>();
  if (p.size() != net.params().size())
    throw ConfigError("network: parameter count does not match widths");
  net.params() = p;
  return net;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string field_csv(std::span<const FieldSample> samples) {
  std::ostringstream ss;
  ss << "rho,theta,x1,x2,u,H\n";
  for (const auto &s : samples)
    ss << num(s.rho) << ',' << num(s.theta) << ',' << num(s.x1) << ','
       << num(s.x2) << ',' << num(s.u) << ',' << num(s.H) << '\n';
  return ss.str();
}

inline std::string design_trace_csv(const DesignResult &r) {
  std::ostringstream ss;
  ss << "iteration,objective,best\n";
  for (std::size_t i = 0; i < r.trace.size(); ++i)
    ss << i << ',' << num(r.trace[i]) << ',' << num(r.best_trace[i]) << '\n';
  return ss.str();
}

inline std::string loss_trace_csv(std::span<const LossComponents> trace) {
  std::ostringstream ss;
  ss << "iteration,pde_int,pde_ext,bd1,bd2,neutral,positivity,reg,total\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto &L = trace[i];
    ss << i << ',' << num(L.pde_int) << ',' << num(L.pde_ext) << ','
       << num(L.bd1) << ',' << num(L.bd2) << ',' << num(L.neutral) << ','
       << num(L.positivity) << ',' << num(L.reg) << ',' << num(L.total_reg())
       << '\n';
  }
  return ss.str();
}

inline std::string collocation_csv(const CollocationSet &c) {
  std::ostringstream ss;
  ss << "kind,x1,x2\n";
  for (const auto &p : c.ext)
    ss << "ext," << num(p.x1) << ',' << num(p.x2) << '\n';
  for (const auto &p : c.interior)
    ss << "int," << num(p[0]) << ',' << num(p[1]) << '\n';
  for (const auto &p : c.bd)
    ss << "bd," << num(p.x1) << ',' << num(p.x2) << '\n';
  for (const auto &p : c.bd_plus)
    ss << "bd_plus," << num(p[0]) << ',' << num(p[1]) << '\n';
  for (const auto &p : c.bd_minus)
    ss << "bd_minus," << num(p[0]) << ',' << num(p[1]) << '\n';
  return ss.str();
}

inline std::string pointwise_csv(const PointwiseStats &st) {
  std::ostringstream ss;
  ss << "theta,mean,sd\n";
  for (std::size_t i = 0; i < st.theta.size(); ++i)
    ss << num(st.theta[i]) << ',' << num(st.mean[i]) << ',' << num(st.sd[i])
       << '\n';
  return ss.str();
}

/// Rows shaped like the consistency table: interface mean-of-sd followed by
/// mean and sd of each metric.
inline std::string consistency_csv_header() {
  return "method,shape,runs,aborted,mean_of_sd,cred_mean,cred_sd,sup_mean,"
         "sup_sd,p_neutral_mean,p_neutral_sd\n";
}

inline std::string consistency_csv_row(const std::string &method,
                                       const std::string &shape,
                                       const StudyResult &r) {
  std::ostringstream ss;
  ss << method << ',' << shape << ',' << r.completed << ',' << r.aborted << ','
     << num(r.pointwise.mean_of_sd) << ',' << num(r.cred.mean) << ','
     << num(r.cred.sd) << ',' << num(r.sup.mean) << ',' << num(r.sup.sd)
     << ',' << num(r.p_neutral.mean) << ',' << num(r.p_neutral.sd) << '\n';
  return ss.str();
}

inline std::string stability_csv(const std::string &method,
                                 const std::string &shape,
                                 std::span<const StabilityRow> rows) {
  std::ostringstream ss;
  ss << "method,shape,sigma_c,runs,aborted,mean_of_sd\n";
  for (const auto &r : rows)
    ss << method << ',' << shape << ',' << num(r.sigma_c) << ','
       << r.completed << ',' << r.aborted << ',' << num(r.mean_of_sd) << '\n';
  return ss.str();
}

} // namespace coco::io
