#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "htype/catalog.hpp"
#include "htype/comparison.hpp"
#include "htype/curvature.hpp"
#include "htype/geodesic.hpp"
#include "htype/harness.hpp"

using namespace htype;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> tol;
};

Vec parse_vec(const std::string& s, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadParameter, what + ": '" + item + "' is not a number");
    }
  }
  if (v.empty()) throw Error(ErrorCode::BadParameter, what + " is empty");
  return Eigen::Map<Vec>(v.data(), static_cast<int>(v.size()));
}

void expect_dim(const Vec& v, int d, const std::string& what) {
  if (v.size() != d)
    throw Error(ErrorCode::BadParameter, what + " needs " + std::to_string(d) + " components, got " + std::to_string(v.size()));
}

Tolerance tolerance(const Globals& g) {
  Tolerance t;
  if (g.tol) t.rel = *g.tol;
  return t;
}

void emit(const Globals& g, const std::string& file, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(g.out);
  write_text(std::filesystem::path(g.out) / file, text);
  std::cout << (std::filesystem::path(g.out) / file).string() << "\n";
}

int cmd_validate(const std::string& spec, const Globals& g) {
  const HTypeModel M = parse_model_spec(spec);
  const Geometry G(M);
  ValidationReport rep = validate_structure(M);
  rep.merge(validate_htype(M));
  rep.merge(verify_structure_identities(G, 1.0, 50, g.seed.value_or(2024)));
  nlohmann::json j = rep.to_json();
  j["model"] = model_to_json(M);
  j["j2"] = validate_j2(M).to_json();
  emit(g, "validation.json", j.dump(1) + "\n");
  return rep.pass() ? 0 : 1;
}

int cmd_geodesic(const std::string& spec, double eps, const std::string& lambda, double T, double step,
                 const std::string& from, const Globals& g) {
  const HTypeModel M = parse_model_spec(spec);
  const Vec lam = parse_vec(lambda, "--lambda");
  expect_dim(lam, M.N(), "--lambda");
  Vec x = chart::identity(M);
  if (!from.empty()) {
    x = parse_vec(from, "--from");
    expect_dim(x, chart::dim(M), "--from");
  }
  const GeodesicRecord rec = flow_geodesic(M, eps, x, lam, T, step, std::max(1, static_cast<int>(0.01 / step)));
  emit(g, "geodesic.dat", geodesic_columns(rec));
  return 0;
}

SearchOptions search(const Globals& g) {
  SearchOptions opt;
  if (g.seed) opt.seed = *g.seed;
  return opt;
}

int cmd_distance(const std::string& spec, double eps, const std::string& from, const std::string& to, const Globals& g) {
  const HTypeModel M = parse_model_spec(spec);
  const Vec x = parse_vec(from, "--from"), y = parse_vec(to, "--to");
  expect_dim(x, chart::dim(M), "--from");
  expect_dim(y, chart::dim(M), "--to");
  const DistanceResult R = solve_distance(M, eps, x, y, search(g));
  emit(g, "distance.json", distance_to_json(R).dump(1) + "\n");
  return 0;
}

int cmd_sweep(const std::string& spec, const std::string& from, const std::string& to, const std::string& ladder,
              const Globals& g) {
  const HTypeModel M = parse_model_spec(spec);
  const Vec x = parse_vec(from, "--from"), y = parse_vec(to, "--to");
  expect_dim(x, chart::dim(M), "--from");
  expect_dim(y, chart::dim(M), "--to");
  const Vec l = parse_vec(ladder, "--eps-ladder");
  std::vector<double> eps(l.data(), l.data() + l.size());
  for (size_t i = 1; i < eps.size(); ++i)
    if (!(eps[i] < eps[i - 1])) throw Error(ErrorCode::BadParameter, "--eps-ladder must be strictly decreasing");
  const auto rows = epsilon_sweep(M, x, y, eps, search(g));
  std::ostringstream os;
  os << "# sweep " << M.id() << "\n# eps distance h v classification\n";
  for (const auto& r : rows)
    os << fmt17(r.eps) << ' ' << fmt17(r.distance) << ' ' << fmt17(r.h) << ' ' << fmt17(r.v) << ' ' << cut_name(r.cls)
       << "\n";
  emit(g, "sweep.dat", os.str());
  return 0;
}

int cmd_check(const std::string& path, const Globals& g) {
  ScenarioConfig c = load_config(path);
  if (g.seed) c.seed = *g.seed;
  if (g.tol) c.tol.rel = *g.tol;
  if (!g.out.empty()) c.output.directory = g.out;
  const ScenarioResult r = run_scenario(c, &std::cerr);
  for (const auto& f : emit_report(r, c.output.formats, c.output.directory)) std::cout << f << "\n";
  std::cout << summary_to_json(r).dump(1) << "\n";
  return r.summary.fail > 0 ? 1 : 0;
}

int cmd_diameter(const std::string& spec, int samples, const Globals& g) {
  const HTypeModel M = parse_model_spec(spec);
  const Geometry G(M);
  const CurvatureInvariants ci = curvature_invariants(G);
  const DiameterCertificate dc = diameter_certificate(G, ci, samples, g.seed.value_or(42), search(g));
  const auto recs = diameter_records(G, ci, dc, tolerance(g));
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j{{"model", M.id()},
                   {"bound_a", opt(dc.bound_a)},
                   {"bound_b", opt(dc.bound_b)},
                   {"bound_c", opt(dc.bound_c)},
                   {"bmii_bound", opt(dc.bmii_bound)},
                   {"empiricalDiameterLowerBound", opt(dc.empiricalDiameterLowerBound)},
                   {"samplesSolved", dc.samplesSolved}};
  nlohmann::json rows = nlohmann::json::array();
  bool fail = false;
  for (const auto& r : recs) {
    rows.push_back(record_to_json(r));
    fail = fail || r.status == Status::Fail;
  }
  j["records"] = rows;
  emit(g, "diameter.json", j.dump(1) + "\n");
  return fail ? 1 : 0;
}

int cmd_report(const std::string& in, const std::string& format, const Globals& g) {
  std::ifstream f(in);
  if (!f) throw Error(ErrorCode::IoError, "cannot open '" + in + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, in + ": " + e.what());
  }
  const ScenarioResult r = result_from_json(j);
  const std::string dir = g.out.empty() ? std::filesystem::path(in).parent_path().string() : g.out;
  for (const auto& file : emit_report(r, {format}, dir.empty() ? "." : dir)) std::cout << file << "\n";
  return r.summary.fail > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"H-type foliation comparison toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 42;
  double tol = 0;
  auto* seedOpt = app.add_option("--seed", seed, "random seed")->group("Global");
  app.add_option("--out", g.out, "output directory")->group("Global");
  auto* tolOpt = app.add_option("--tol", tol, "relative margin tolerance")->check(CLI::NonNegativeNumber)->group("Global");
  app.fallthrough();

  std::string model, lambda, from, to, ladder, config, in, format;
  double eps = 0, T = 1, step = 1e-3;
  int samples = 48;

  auto* validate = app.add_subcommand("validate", "build a model and run its structure checks");
  validate->add_option("--model", model, "model spec, e.g. heisenberg:d=1")->required();

  auto* geodesic = app.add_subcommand("geodesic", "integrate the geodesic flow from a covector");
  geodesic->add_option("--model", model)->required();
  geodesic->add_option("--eps", eps)->required()->check(CLI::NonNegativeNumber);
  geodesic->add_option("--lambda", lambda, "initial covector, comma separated frame components")->required();
  geodesic->add_option("--time", T)->required();
  geodesic->add_option("--step", step)->check(CLI::PositiveNumber);
  geodesic->add_option("--from", from, "start point in chart coordinates (default: identity)");

  auto* distance = app.add_subcommand("distance", "g_eps distance between two chart points");
  distance->add_option("--model", model)->required();
  distance->add_option("--eps", eps)->required()->check(CLI::NonNegativeNumber);
  distance->add_option("--from", from)->required();
  distance->add_option("--to", to)->required();

  auto* sweep = app.add_subcommand("sweep", "distance along a decreasing epsilon ladder");
  sweep->add_option("--model", model)->required();
  sweep->add_option("--from", from)->required();
  sweep->add_option("--to", to)->required();
  sweep->add_option("--eps-ladder", ladder)->required();

  auto* check = app.add_subcommand("check", "run a scenario config");
  check->add_option("--config", config)->required()->check(CLI::ExistingFile);

  auto* diameter = app.add_subcommand("diameter", "diameter bounds and the empirical lower bound");
  diameter->add_option("--model", model)->required();
  diameter->add_option("--samples", samples)->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "re-emit a records.json in another format");
  report->add_option("--in", in)->required()->check(CLI::ExistingFile);
  report->add_option("--format", format)->required()->check(CLI::IsMember({"csv", "json", "dat", "svg"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*seedOpt) g.seed = seed;
  if (*tolOpt) g.tol = tol;

  try {
    if (*validate) return cmd_validate(model, g);
    if (*geodesic) return cmd_geodesic(model, eps, lambda, T, step, from, g);
    if (*distance) return cmd_distance(model, eps, from, to, g);
    if (*sweep) return cmd_sweep(model, from, to, ladder, g);
    if (*check) return cmd_check(config, g);
    if (*diameter) return cmd_diameter(model, samples, g);
    if (*report) return cmd_report(in, format, g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::ConfigError)
      std::cerr << "config keys: model, epsilonLadder, pointGrid{type,density,radius,points}, theorems, "
                   "tolerances{abs,rel}, seed, output{directory,formats}, search{gridDensity}, workers, "
                   "diameterSamples\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
