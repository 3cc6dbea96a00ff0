#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "htype/connection.hpp"
#include "htype/core.hpp"
#include "htype/curvature.hpp"
#include "htype/model.hpp"

namespace htype {

inline double nabla_t_max(const Geometry& G, bool horizontalOnly) {
  const int N = G.N();
  const int lim = horizontalOnly ? G.n() : N;
  double mx = 0;
  for (int x = 0; x < lim; ++x)
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b)
        mx = std::max(mx, G.nabla_t(Vec::Unit(N, x), Vec::Unit(N, a), Vec::Unit(N, b)).cwiseAbs().maxCoeff());
  return mx;
}

// flags and kappa from the structure constants
inline void populate_derived(HTypeModel& M) {
  M.flags.isCarnot = M.kind != ModelKind::SU2;
  M.flags.isCompact = M.kind == ModelKind::SU2;
  M.flags.satisfiesJ2 = validate_j2(M).pass();
  const Geometry G(M);
  M.flags.horizontallyParallelTorsion = nabla_t_max(G, true) <= 1e-12;
  M.flags.completelyParallelTorsion = nabla_t_max(G, false) <= 1e-12;
  const KappaFit fit = fit_clifford_kappa(G);
  M.kappa = fit.kappa;
  if (M.kappa && leaf_curvature_defect(G, *M.kappa) > 1e-10) M.kappa.reset();
}

inline HTypeModel build_model(ModelKind kind, ModelParams p = {}) {
  HTypeModel M;
  switch (kind) {
    case ModelKind::Heisenberg:
      if (p.d < 1) throw Error(ErrorCode::BadParameter, "heisenberg needs d >= 1");
      M = carnot_from_module(clifford_generators(2 * p.d, 1), kind, p);
      break;
    case ModelKind::QuaternionicHeisenberg:
      if (p.k < 1) throw Error(ErrorCode::BadParameter, "quaternionic needs k >= 1");
      M = carnot_from_module(clifford_generators(4 * p.k, 3), kind, p);
      break;
    case ModelKind::OctonionicHeisenberg:
      M = carnot_from_module(clifford_generators(8, 7), kind, p);
      break;
    case ModelKind::HTypeCarnot:
      if (p.n < 1 || p.m < 1) throw Error(ErrorCode::BadParameter, "carnot needs n, m >= 1");
      M = carnot_from_module(clifford_generators(p.n, p.m), kind, p);
      break;
    case ModelKind::SU2:
      M = su2_constants(p.s);
      break;
  }
  populate_derived(M);
  return M;
}

inline HTypeModel build_model(ModelKind kind, const CliffordModule& cm) {
  ModelParams p;
  p.n = cm.n;
  p.m = cm.m;
  HTypeModel M = carnot_from_module(cm, kind, p);
  populate_derived(M);
  return M;
}

// "heisenberg:d=1", "quaternionic:k=1", "octonionic", "carnot:n=4,m=2", "su2:s=1"
inline HTypeModel parse_model_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "bad model parameter '" + item + "'");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  auto geti = [&](const std::string& k, int def) {
    auto it = kv.find(k);
    if (it == kv.end()) return def;
    try {
      size_t pos = 0;
      const int v = std::stoi(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(k);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "model parameter " + k + " is not an integer");
    }
  };
  ModelParams p;
  if (name == "heisenberg") {
    p.d = geti("d", 1);
    return build_model(ModelKind::Heisenberg, p);
  }
  if (name == "quaternionic") {
    p.k = geti("k", 1);
    return build_model(ModelKind::QuaternionicHeisenberg, p);
  }
  if (name == "octonionic") return build_model(ModelKind::OctonionicHeisenberg, p);
  if (name == "carnot") {
    p.n = geti("n", 0);
    p.m = geti("m", 0);
    return build_model(ModelKind::HTypeCarnot, p);
  }
  if (name == "su2") {
    auto it = kv.find("s");
    if (it != kv.end()) {
      try {
        p.s = std::stod(it->second);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "model parameter s is not a number");
      }
    }
    return build_model(ModelKind::SU2, p);
  }
  throw Error(ErrorCode::ConfigError, "unknown model '" + name + "'");
}

inline ModelKind kind_from_name(const std::string& s) {
  for (ModelKind k : {ModelKind::Heisenberg, ModelKind::QuaternionicHeisenberg, ModelKind::OctonionicHeisenberg,
                      ModelKind::HTypeCarnot, ModelKind::SU2})
    if (s == kind_name(k)) return k;
  throw Error(ErrorCode::ConfigError, "unknown model kind '" + s + "'");
}

inline nlohmann::json model_to_json(const HTypeModel& M) {
  using nlohmann::json;
  const int N = M.N();
  json sc = json::array();
  for (int a = 0; a < N; ++a) {
    json ra = json::array();
    for (int b = 0; b < N; ++b) {
      json rb = json::array();
      for (int k = 0; k < N; ++k) rb.push_back(M.C(a, b, k));
      ra.push_back(rb);
    }
    sc.push_back(ra);
  }
  json j;
  j["kind"] = kind_name(M.kind);
  j["params"] = {{"d", M.params.d}, {"k", M.params.k}, {"n", M.params.n}, {"m", M.params.m}, {"s", M.params.s}};
  j["n"] = M.n;
  j["m"] = M.m;
  j["chart"] = M.chart == ChartKind::UnitQuaternion ? "UnitQuaternion" : "ExponentialCoordinatesStep2";
  j["structureConstants"] = sc;
  j["flags"] = {{"isCarnot", M.flags.isCarnot},
                {"isCompact", M.flags.isCompact},
                {"satisfiesJ2", M.flags.satisfiesJ2},
                {"horizontallyParallelTorsion", M.flags.horizontallyParallelTorsion},
                {"completelyParallelTorsion", M.flags.completelyParallelTorsion}};
  j["kappa"] = M.kappa ? json(*M.kappa) : json(nullptr);
  return j;
}

// Doubles are written with round-trip precision by nlohmann::json, so this inverts model_to_json bitwise.
inline HTypeModel model_from_json(const nlohmann::json& j) {
  try {
    HTypeModel M;
    M.kind = kind_from_name(j.at("kind").get<std::string>());
    const auto& p = j.at("params");
    M.params.d = p.at("d").get<int>();
    M.params.k = p.at("k").get<int>();
    M.params.n = p.at("n").get<int>();
    M.params.m = p.at("m").get<int>();
    M.params.s = p.at("s").get<double>();
    M.n = j.at("n").get<int>();
    M.m = j.at("m").get<int>();
    M.chart = j.at("chart").get<std::string>() == "UnitQuaternion" ? ChartKind::UnitQuaternion
                                                                    : ChartKind::ExponentialCoordinatesStep2;
    const int N = M.N();
    const auto& sc = j.at("structureConstants");
    M.c.assign(static_cast<size_t>(N) * N * N, 0.0);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b)
        for (int k = 0; k < N; ++k) M.c[(a * N + b) * N + k] = sc.at(a).at(b).at(k).get<double>();
    const auto& f = j.at("flags");
    M.flags.isCarnot = f.at("isCarnot").get<bool>();
    M.flags.isCompact = f.at("isCompact").get<bool>();
    M.flags.satisfiesJ2 = f.at("satisfiesJ2").get<bool>();
    M.flags.horizontallyParallelTorsion = f.at("horizontallyParallelTorsion").get<bool>();
    M.flags.completelyParallelTorsion = f.at("completelyParallelTorsion").get<bool>();
    if (!j.at("kappa").is_null()) M.kappa = j.at("kappa").get<double>();
    detail::finish_constants(M);
    return M;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("model document: ") + e.what());
  }
}

}  // namespace htype
