#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "htype/catalog.hpp"
#include "htype/comparison.hpp"
#include "htype/core.hpp"
#include "htype/curvature.hpp"
#include "htype/geodesic.hpp"
#include "htype/model.hpp"
#include "htype/report.hpp"

namespace htype {

// ---- configuration -----------------------------------------------------------------

enum class GridType { Ball, Axis, Custom };

inline const char* grid_name(GridType g) {
  switch (g) {
    case GridType::Ball: return "ball";
    case GridType::Axis: return "axis";
    case GridType::Custom: return "custom";
  }
  return "?";
}

struct PointGrid {
  GridType type = GridType::Ball;
  int density = 20;                 // ball: interior points wanted; axis: points on the ray
  double radius = 2.5;              // largest horizontal exponential-coordinate norm
  std::vector<std::vector<double>> points;  // custom: exponential coordinates, frame components
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats = {"csv", "json"};
};

struct ScenarioConfig {
  std::string model = "heisenberg:d=1";
  std::vector<double> epsilonLadder = {1.0, 0.1, 0.0};
  PointGrid grid;
  bool allApplicable = true;
  std::vector<TheoremId> theorems;
  Tolerance tol;
  std::uint64_t seed = 42;
  OutputSpec output;
  int searchDensity = 3;
  int workers = 1;                  // 0: one per hardware thread
  int diameterSamples = 48;
};

namespace detail {

inline Error config_error(const std::string& where, const std::string& what) {
  return Error(ErrorCode::ConfigError, where + ": " + what);
}

inline double number_at(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) throw config_error(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw config_error(where, "expected a finite number");
  return v;
}

inline int int_at(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer()) throw config_error(where, "expected an integer");
  return j.get<int>();
}

inline void only_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw config_error(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw config_error(where + "/" + it.key(), "unknown key");
  }
}

}  // namespace detail

inline ScenarioConfig parse_config(const nlohmann::json& j) {
  using detail::config_error;
  detail::only_keys(j, "", {"model", "epsilonLadder", "pointGrid", "theorems", "tolerances", "seed", "output", "search",
                            "workers", "diameterSamples"});
  ScenarioConfig c;
  if (!j.contains("model") || !j["model"].is_string()) throw config_error("/model", "required model spec string");
  c.model = j["model"].get<std::string>();

  if (j.contains("epsilonLadder")) {
    const auto& l = j["epsilonLadder"];
    if (!l.is_array() || l.empty()) throw config_error("/epsilonLadder", "expected a non-empty array");
    c.epsilonLadder.clear();
    for (size_t i = 0; i < l.size(); ++i) {
      const std::string where = "/epsilonLadder/" + std::to_string(i);
      const double e = detail::number_at(l[i], where);
      if (e < 0) throw config_error(where, "epsilon must be non-negative");
      if (i > 0 && !(e < c.epsilonLadder.back())) throw config_error(where, "ladder must be strictly decreasing");
      c.epsilonLadder.push_back(e);
    }
  }

  if (j.contains("pointGrid")) {
    const auto& g = j["pointGrid"];
    detail::only_keys(g, "/pointGrid", {"type", "density", "radius", "points"});
    if (g.contains("type")) {
      if (!g["type"].is_string()) throw config_error("/pointGrid/type", "expected a string");
      const std::string t = g["type"].get<std::string>();
      if (t == "ball") c.grid.type = GridType::Ball;
      else if (t == "axis") c.grid.type = GridType::Axis;
      else if (t == "custom") c.grid.type = GridType::Custom;
      else throw config_error("/pointGrid/type", "must be ball, axis or custom");
    }
    if (g.contains("density")) c.grid.density = detail::int_at(g["density"], "/pointGrid/density");
    if (c.grid.density < 1) throw config_error("/pointGrid/density", "must be at least 1");
    if (g.contains("radius")) c.grid.radius = detail::number_at(g["radius"], "/pointGrid/radius");
    if (!(c.grid.radius > 0)) throw config_error("/pointGrid/radius", "must be positive");
    if (g.contains("points")) {
      const auto& p = g["points"];
      if (!p.is_array()) throw config_error("/pointGrid/points", "expected an array of coordinate arrays");
      for (size_t i = 0; i < p.size(); ++i) {
        const std::string where = "/pointGrid/points/" + std::to_string(i);
        if (!p[i].is_array() || p[i].empty()) throw config_error(where, "expected a coordinate array");
        std::vector<double> xi;
        for (size_t k = 0; k < p[i].size(); ++k) xi.push_back(detail::number_at(p[i][k], where + "/" + std::to_string(k)));
        c.grid.points.push_back(xi);
      }
    }
    if (c.grid.type == GridType::Custom && c.grid.points.empty())
      throw config_error("/pointGrid/points", "custom grid needs at least one point");
  }

  if (j.contains("theorems")) {
    const auto& t = j["theorems"];
    if (t.is_string()) {
      if (t.get<std::string>() != "all-applicable") throw config_error("/theorems", "expected \"all-applicable\" or a list");
    } else if (t.is_array() && !t.empty()) {
      c.allApplicable = false;
      for (size_t i = 0; i < t.size(); ++i) {
        const std::string where = "/theorems/" + std::to_string(i);
        if (!t[i].is_string()) throw config_error(where, "expected a theorem id");
        const auto id = theorem_from_name(t[i].get<std::string>());
        if (!id) throw config_error(where, "unknown theorem id '" + t[i].get<std::string>() + "'");
        if (std::find(c.theorems.begin(), c.theorems.end(), *id) == c.theorems.end()) c.theorems.push_back(*id);
      }
    } else {
      throw config_error("/theorems", "expected \"all-applicable\" or a non-empty list");
    }
  }

  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    detail::only_keys(t, "/tolerances", {"abs", "rel"});
    if (t.contains("abs")) c.tol.abs = detail::number_at(t["abs"], "/tolerances/abs");
    if (t.contains("rel")) c.tol.rel = detail::number_at(t["rel"], "/tolerances/rel");
    if (c.tol.abs < 0 || c.tol.rel < 0) throw config_error("/tolerances", "tolerances must be non-negative");
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0))
      throw config_error("/seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("output")) {
    const auto& o = j["output"];
    detail::only_keys(o, "/output", {"directory", "formats"});
    if (o.contains("directory")) {
      if (!o["directory"].is_string()) throw config_error("/output/directory", "expected a string");
      c.output.directory = o["directory"].get<std::string>();
    }
    if (o.contains("formats")) {
      const auto& f = o["formats"];
      if (!f.is_array()) throw config_error("/output/formats", "expected an array");
      c.output.formats.clear();
      for (size_t i = 0; i < f.size(); ++i) {
        const std::string where = "/output/formats/" + std::to_string(i);
        if (!f[i].is_string()) throw config_error(where, "expected a string");
        const std::string s = f[i].get<std::string>();
        if (s != "csv" && s != "json" && s != "dat" && s != "svg") throw config_error(where, "format must be csv, json, dat or svg");
        c.output.formats.push_back(s);
      }
    }
  }

  if (j.contains("search")) {
    const auto& s = j["search"];
    detail::only_keys(s, "/search", {"gridDensity"});
    if (s.contains("gridDensity")) c.searchDensity = detail::int_at(s["gridDensity"], "/search/gridDensity");
    if (c.searchDensity < 1) throw config_error("/search/gridDensity", "must be at least 1");
  }
  if (j.contains("workers")) c.workers = detail::int_at(j["workers"], "/workers");
  if (c.workers < 0) throw config_error("/workers", "must be non-negative");
  if (j.contains("diameterSamples")) c.diameterSamples = detail::int_at(j["diameterSamples"], "/diameterSamples");
  if (c.diameterSamples < 1) throw config_error("/diameterSamples", "must be at least 1");
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return parse_config(j);
}

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  nlohmann::json th;
  if (c.allApplicable) {
    th = "all-applicable";
  } else {
    th = nlohmann::json::array();
    for (TheoremId id : c.theorems) th.push_back(theorem_name(id));
  }
  nlohmann::json grid{{"type", grid_name(c.grid.type)}, {"density", c.grid.density}, {"radius", c.grid.radius}};
  if (!c.grid.points.empty()) grid["points"] = c.grid.points;
  return nlohmann::json{{"model", c.model},
                        {"epsilonLadder", c.epsilonLadder},
                        {"pointGrid", grid},
                        {"theorems", th},
                        {"tolerances", {{"abs", c.tol.abs}, {"rel", c.tol.rel}}},
                        {"seed", c.seed},
                        {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}}},
                        {"search", {{"gridDensity", c.searchDensity}}},
                        {"workers", c.workers},
                        {"diameterSamples", c.diameterSamples}};
}

// ---- scenario ------------------------------------------------------------------------

struct TheoremCounts {
  int pass = 0, fail = 0, skipped = 0;
};

struct ScenarioSummary {
  std::map<std::string, TheoremCounts> perTheorem;  // keyed by theorem name
  int pass = 0, fail = 0, skipped = 0;
  int candidates = 0, interior = 0;
  std::map<std::string, int> excluded;             // reason -> count
  std::vector<std::string> notes;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::string modelId;
  ModelFlags flags;
  CurvatureInvariants invariants;
  int chartDim = 0;
  std::vector<ComparisonRecord> records;
  std::optional<DiameterCertificate> diameter;
  ScenarioSummary summary;
};

// y = exp(xi) for the candidate stream of a grid; ball candidates keep |xi_V| <= 0.1 |xi_H|^2
inline std::vector<Vec> grid_candidates(const HTypeModel& M, const PointGrid& g, std::uint64_t seed, int count,
                                        int offset = 0) {
  const int n = M.n, m = M.m;
  std::vector<Vec> out;
  if (g.type == GridType::Custom) {
    for (const auto& p : g.points) {
      if (static_cast<int>(p.size()) != M.N())
        throw Error(ErrorCode::ConfigError, "/pointGrid/points: expected " + std::to_string(M.N()) + " coordinates");
      out.push_back(chart::exp_frame(M, Eigen::Map<const Vec>(p.data(), M.N())));
    }
    return out;
  }
  if (g.type == GridType::Axis) {
    for (int k = 0; k < g.density; ++k) {
      Vec xi = Vec::Zero(M.N());
      const double t = g.radius * (k + 1) / g.density;
      xi[0] = t;
      xi[n] = 0.05 * t * t;
      out.push_back(chart::exp_frame(M, xi));
    }
    return out;
  }
  // ball: the stream is a pure function of (seed, index), so batches can be drawn in any order
  for (int k = offset; k < offset + count; ++k) {
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k));
    Vec xi(M.N());
    xi.head(n) = rng.unit_vec(n) * (g.radius * rng.uniform(0.12, 1.0));
    xi.tail(m) = rng.unit_vec(m) * (0.1 * xi.head(n).squaredNorm() * rng.uniform(-1.0, 1.0));
    out.push_back(chart::exp_frame(M, xi));
  }
  return out;
}

// Theorems run at one rung: explicit selections always produce a row, all-applicable drops structural misfits.
inline std::vector<TheoremId> selected_theorems(const ScenarioConfig& c, const CheckContext& ctx) {
  std::vector<TheoremId> out;
  if (!c.allApplicable) return c.theorems;
  for (TheoremId id : all_theorems()) {
    if (is_diameter(id)) {
      if (ctx.G->model.flags.isCompact) out.push_back(id);
      continue;
    }
    if (!detail::structural_skip(ctx, id)) out.push_back(id);
  }
  return out;
}

namespace detail {

struct PointOutcome {
  bool interior = false;
  std::string excludedReason;
  std::vector<ComparisonRecord> records;
};

// eps = 0 (or the smallest rung) is searched globally first; larger rungs add continuation from the previous one.
inline PointOutcome evaluate_grid_point(const CheckContext& ctx, const ScenarioConfig& c,
                                        const std::vector<TheoremId>& ids, const Vec& x, const Vec& y,
                                        const SearchOptions& opt) {
  PointOutcome out;
  const Geometry& G = *ctx.G;
  std::vector<double> ascending(c.epsilonLadder.rbegin(), c.epsilonLadder.rend());
  std::map<double, PointSolution> sol;
  const Vec* guess = nullptr;
  for (double e : ascending) {
    try {
      sol[e] = solve_point(G, e, x, y, opt, guess);
    } catch (const Error& err) {
      out.excludedReason = error_name(err.code());
      return out;
    }
    if (sol[e].cls != CutClass::Interior) {
      out.excludedReason = cut_name(sol[e].cls);
      return out;
    }
    guess = &sol[e].at.R.lambdaStar;
  }
  out.interior = true;
  for (double e : c.epsilonLadder)
    for (TheoremId id : ids) {
      if (is_diameter(id)) continue;
      if (c.allApplicable && !theorem_at_eps(id, e)) continue;
      out.records.push_back(check_point(ctx, id, sol[e]));
    }
  return out;
}

// Runs fn(i) for i in [0, count) on `workers` threads; results are written by index so order is fixed.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (int w = 0; w < std::min(workers, count); ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline void tally(ScenarioSummary& s, const ComparisonRecord& rec) {
  auto& t = s.perTheorem[theorem_name(rec.id)];
  switch (rec.status) {
    case Status::Pass: ++t.pass; ++s.pass; break;
    case Status::Fail: ++t.fail; ++s.fail; break;
    case Status::HypothesisSkipped: ++t.skipped; ++s.skipped; break;
  }
}

}  // namespace detail

inline ScenarioResult run_scenario(const ScenarioConfig& c, std::ostream* progress = nullptr) {
  HTypeModel M;
  try {
    M = parse_model_spec(c.model);
  } catch (const Error& e) {
    throw Error(ErrorCode::ModelError, "/model: " + std::string(e.what()));
  }
  const ValidationReport vr = validate_structure(M);
  if (!vr.pass()) throw Error(ErrorCode::ModelError, "/model: structure validation failed");
  const Geometry G(M);
  ScenarioResult res;
  res.config = c;
  res.modelId = M.id();
  res.flags = M.flags;
  res.chartDim = chart::dim(M);
  res.invariants = curvature_invariants(G);
  CheckContext ctx{&G, res.invariants, c.tol};
  const auto ids = selected_theorems(c, ctx);
  SearchOptions opt;
  opt.gridDensity = c.searchDensity;
  opt.seed = c.seed;
  const Vec x = chart::identity(M);
  const int workers = c.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : c.workers;

  auto& S = res.summary;
  auto run_batch = [&](const std::vector<Vec>& ys, int wanted) {
    std::vector<detail::PointOutcome> outs(ys.size());
    detail::parallel_for(static_cast<int>(ys.size()), workers,
                         [&](int i) { outs[i] = detail::evaluate_grid_point(ctx, c, ids, x, ys[i], opt); });
    for (auto& o : outs) {
      if (wanted >= 0 && S.interior >= wanted) break;
      ++S.candidates;
      if (!o.interior) {
        ++S.excluded[o.excludedReason];
        continue;
      }
      ++S.interior;
      for (auto& r : o.records) res.records.push_back(std::move(r));
      if (progress) *progress << "point " << S.candidates << ": interior (" << S.interior << ")\n" << std::flush;
    }
  };

  if (c.grid.type == GridType::Ball) {
    const int wanted = c.grid.density;
    int offset = 0;
    while (S.interior < wanted && offset < 4 * wanted) {
      const int batch = std::min(wanted - S.interior, 4 * wanted - offset);
      run_batch(grid_candidates(M, c.grid, c.seed, batch, offset), wanted);
      offset += batch;
    }
    if (S.interior < wanted)
      S.notes.push_back("only " + std::to_string(S.interior) + " interior points after " + std::to_string(offset) +
                        " candidates");
  } else {
    run_batch(grid_candidates(M, c.grid, c.seed, 0), -1);
  }

  bool wantDiam = false;
  for (TheoremId id : ids) wantDiam = wantDiam || is_diameter(id);
  if (wantDiam) {
    res.diameter = diameter_certificate(G, res.invariants, c.diameterSamples, c.seed, opt);
    for (auto& r : diameter_records(G, res.invariants, *res.diameter, c.tol))
      if (std::find(ids.begin(), ids.end(), r.id) != ids.end()) res.records.push_back(std::move(r));
  }
  for (const auto& r : res.records) detail::tally(S, r);
  if (!M.flags.satisfiesJ2) S.notes.push_back("satisfiesJ2=false: theorems that assume J2 are HypothesisSkipped");
  if (M.n - M.m - 1 <= 0) S.notes.push_back("n-m-1=0: H_Riem is empty");
  return res;
}

inline nlohmann::json summary_to_json(const ScenarioResult& r) {
  const auto& s = r.summary;
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [k, t] : s.perTheorem) per[k] = {{"pass", t.pass}, {"fail", t.fail}, {"skipped", t.skipped}};
  nlohmann::json ex = nlohmann::json::object();
  for (const auto& [k, v] : s.excluded) ex[k] = v;
  nlohmann::json j{{"model", r.modelId},
                   {"pass", s.pass},
                   {"fail", s.fail},
                   {"skipped", s.skipped},
                   {"candidates", s.candidates},
                   {"interior", s.interior},
                   {"excluded", ex},
                   {"perTheorem", per},
                   {"notes", s.notes}};
  if (r.diameter && r.diameter->empiricalDiameterLowerBound)
    j["empiricalDiameterLowerBound"] = *r.diameter->empiricalDiameterLowerBound;
  return j;
}

inline nlohmann::json invariants_to_json(const CurvatureInvariants& ci) {
  return nlohmann::json{{"secMin_H", ci.secMin_H},
                        {"secMin_RiemPlanes", ci.secMin_RiemPlanes},
                        {"secMin_SasPlanes", ci.secMin_SasPlanes},
                        {"ricRiem_min", ci.ricRiem_min},
                        {"ricSas_min", ci.ricSas_min},
                        {"bmii_min", ci.bmii_min},
                        {"kappa", ci.kappa ? nlohmann::json(*ci.kappa) : nlohmann::json(nullptr)},
                        {"riemPlanesEmpty", ci.riemPlanesEmpty}};
}

// ---- records I/O -----------------------------------------------------------------------

inline ComparisonRecord record_from_json(const nlohmann::json& j) {
  auto num = [&](const char* k) {
    const auto& v = j.at(k);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  ComparisonRecord r;
  const auto id = theorem_from_name(j.at("theorem_id").get<std::string>());
  if (!id) throw Error(ErrorCode::ConfigError, "unknown theorem id in records");
  r.id = *id;
  r.model = j.at("model").get<std::string>();
  r.eps = j.at("eps").get<double>();
  const auto xs = j.at("x").get<std::vector<double>>(), ys = j.at("y").get<std::vector<double>>();
  r.x = Eigen::Map<const Vec>(xs.data(), static_cast<int>(xs.size()));
  r.y = Eigen::Map<const Vec>(ys.data(), static_cast<int>(ys.size()));
  r.r = num("r");
  r.h = num("h");
  r.v = num("v");
  r.hyp.rho = num("rho");
  r.hyp.kappa = num("kappa");
  r.hyp.K = num("K");
  r.hyp.K1 = num("K1");
  r.hyp.K2 = num("K2");
  r.lhs = num("lhs");
  r.rhs = num("rhs");
  r.margin = num("margin");
  const std::string st = j.at("status").get<std::string>();
  r.status = st == "Pass" ? Status::Pass : st == "Fail" ? Status::Fail : Status::HypothesisSkipped;
  r.note = j.value("note", "");
  return r;
}

inline std::string records_csv(const ScenarioResult& r) {
  std::ostringstream os;
  os << "# model " << r.modelId << "\n";
  os << "# sectional curvature convention: Sec(X^Y) = <R(X,Y)Y,X>, Bott connection\n";
  os << "# tolerance abs=" << fmt17(r.config.tol.abs) << " rel=" << fmt17(r.config.tol.rel) << "\n";
  os << "# seed " << r.config.seed << "\n";
  os << csv_header(r.chartDim) << "\n";
  for (const auto& rec : r.records) os << csv_row(rec) << "\n";
  return os.str();
}

inline nlohmann::json result_to_json(const ScenarioResult& r) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& rec : r.records) recs.push_back(record_to_json(rec));
  return nlohmann::json{{"model", r.modelId},
                        {"chartDim", r.chartDim},
                        {"secConvention", "Sec(X^Y) = <R(X,Y)Y,X>, Bott connection"},
                        {"config", config_to_json(r.config)},
                        {"invariants", invariants_to_json(r.invariants)},
                        {"summary", summary_to_json(r)},
                        {"records", recs}};
}

// Rebuilds the record part of a result from its JSON mirror (for `report`).
inline ScenarioResult result_from_json(const nlohmann::json& j) {
  try {
    ScenarioResult r;
    r.modelId = j.at("model").get<std::string>();
    r.chartDim = j.at("chartDim").get<int>();
    if (j.contains("config")) {
      const auto& t = j["config"].at("tolerances");
      r.config.tol.abs = t.at("abs").get<double>();
      r.config.tol.rel = t.at("rel").get<double>();
      r.config.seed = j["config"].at("seed").get<std::uint64_t>();
    }
    for (const auto& rec : j.at("records")) {
      r.records.push_back(record_from_json(rec));
      detail::tally(r.summary, r.records.back());
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("records document: ") + e.what());
  }
}

// rows with a finite (lhs, rhs) for one theorem, sorted by (eps, r)
inline std::vector<const ComparisonRecord*> curve_rows(const ScenarioResult& r, TheoremId id) {
  std::vector<const ComparisonRecord*> rows;
  for (const auto& rec : r.records)
    if (rec.id == id && std::isfinite(rec.lhs) && std::isfinite(rec.rhs) && std::isfinite(rec.r)) rows.push_back(&rec);
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRecord* a, const ComparisonRecord* b) {
    return a->eps != b->eps ? a->eps > b->eps : a->r < b->r;
  });
  return rows;
}

inline std::vector<TheoremId> present_theorems(const ScenarioResult& r) {
  std::vector<TheoremId> out;
  for (TheoremId id : all_theorems())
    if (!curve_rows(r, id).empty()) out.push_back(id);
  return out;
}

inline std::string dat_text(const ScenarioResult& r, TheoremId id) {
  std::ostringstream os;
  os << "# theorem " << theorem_name(id) << " model " << r.modelId << "\n# eps r lhs rhs margin status\n";
  for (const auto* rec : curve_rows(r, id))
    os << fmt17(rec->eps) << ' ' << fmt17(rec->r) << ' ' << fmt17(rec->lhs) << ' ' << fmt17(rec->rhs) << ' '
       << fmt17(rec->margin) << ' ' << status_name(rec->status) << "\n";
  return os.str();
}

// lhs (markers) and rhs (polyline per eps) against r
inline std::string svg_text(const ScenarioResult& r, TheoremId id) {
  const auto rows = curve_rows(r, id);
  const double W = 640, H = 420, L = 60, R = 20, T = 30, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto* rec : rows) {
    x0 = std::min(x0, rec->r);
    x1 = std::max(x1, rec->r);
    y0 = std::min({y0, rec->lhs, rec->rhs});
    y1 = std::max({y1, rec->lhs, rec->rhs});
  }
  if (rows.empty()) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  char buf[128];
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"20\" font-family=\"monospace\" font-size=\"13\">" << theorem_name(id) << " on "
     << r.modelId << ": lhs (dots) vs rhs (lines) against r</text>\n";
  std::snprintf(buf, sizeof buf, "<path d=\"M%.2f %.2f L%.2f %.2f L%.2f %.2f\" stroke=\"black\" fill=\"none\"/>\n", L,
                T, L, H - B, W - R, H - B);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\">%.4g</text>\n", L, H - B + 15, x0);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\">%.4g</text>\n", W - R - 40, H - B + 15, x1);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"2\" y=\"%.2f\" font-size=\"11\">%.4g</text>\n", H - B, y0);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"2\" y=\"%.2f\" font-size=\"11\">%.4g</text>\n", T + 10, y1);
  os << buf;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  int series = 0;
  for (size_t i = 0; i < rows.size();) {
    size_t j = i;
    std::string d;
    while (j < rows.size() && rows[j]->eps == rows[i]->eps) {
      std::snprintf(buf, sizeof buf, "%s%.2f %.2f", d.empty() ? "M" : " L", px(rows[j]->r), py(rows[j]->rhs));
      d += buf;
      ++j;
    }
    const char* col = colors[series % 6];
    os << "<path d=\"" << d << "\" stroke=\"" << col << "\" fill=\"none\"/>\n";
    for (size_t k = i; k < j; ++k) {
      std::snprintf(buf, sizeof buf, "<path d=\"M%.2f %.2f h2 v2 h-2 z\" fill=\"%s\"/>\n", px(rows[k]->r) - 1,
                    py(rows[k]->lhs) - 1, rows[k]->status == Status::Fail ? "black" : col);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" fill=\"%s\">eps=%.3g</text>\n",
                  W - R - 90, T + 14.0 * (series + 1), col, rows[i]->eps);
    os << buf;
    ++series;
    i = j;
  }
  os << "</svg>\n";
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + p.string() + "'");
}

// Writes the requested formats into `directory`; returns the files written in a fixed order.
inline std::vector<std::string> emit_report(const ScenarioResult& r, const std::vector<std::string>& formats,
                                            const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + directory + "': " + ec.message());
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& text) {
    const fs::path p = fs::path(directory) / name;
    write_text(p, text);
    files.push_back(p.string());
  };
  for (const auto& f : formats) {
    if (f == "csv") {
      put("records.csv", records_csv(r));
    } else if (f == "json") {
      put("records.json", result_to_json(r).dump(1) + "\n");
    } else if (f == "dat") {
      for (TheoremId id : present_theorems(r)) put(std::string(theorem_name(id)) + ".dat", dat_text(r, id));
    } else if (f == "svg") {
      for (TheoremId id : present_theorems(r)) put(std::string(theorem_name(id)) + ".svg", svg_text(r, id));
    } else {
      throw Error(ErrorCode::BadParameter, "unknown report format '" + f + "'");
    }
  }
  put("summary.json", summary_to_json(r).dump(1) + "\n");
  return files;
}

}  // namespace htype
