#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "htype/catalog.hpp"
#include "htype/harness.hpp"

using namespace htype;

namespace {

std::string config_error_of(const nlohmann::json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigError for " << j.dump();
  return "";
}

ScenarioConfig small(const std::string& model, int density) {
  ScenarioConfig c;
  c.model = model;
  c.epsilonLadder = {0.5, 0.0};
  c.grid.density = density;
  c.grid.radius = 2.0;
  c.seed = 5;
  return c;
}

std::string after_comments(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') return line;
  return "";
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("htype_harness_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, Defaults) {
  const ScenarioConfig c = parse_config(nlohmann::json{{"model", "heisenberg:d=1"}});
  EXPECT_TRUE(c.allApplicable);
  EXPECT_EQ(c.epsilonLadder, (std::vector<double>{1.0, 0.1, 0.0}));
  EXPECT_EQ(c.grid.type, GridType::Ball);
}

TEST(Config, ErrorsCarryJsonPointer) {
  EXPECT_NE(config_error_of({{"model", "heisenberg:d=1"}, {"epsilonLadder", {0.1, 1.0}}}).find("/epsilonLadder/1"),
            std::string::npos);
  EXPECT_NE(config_error_of({{"model", "heisenberg:d=1"}, {"epsilonLadder", {1.0, -0.5}}}).find("/epsilonLadder/1"),
            std::string::npos);
  EXPECT_NE(config_error_of({{"model", "heisenberg:d=1"}, {"pointGrid", {{"foo", 1}}}}).find("/pointGrid"),
            std::string::npos);
  EXPECT_NE(config_error_of({{"model", "heisenberg:d=1"}, {"pointGrid", {{"density", 0}}}}).find("/pointGrid/density"),
            std::string::npos);
  EXPECT_NE(config_error_of({{"model", "heisenberg:d=1"}, {"theorems", {"GEOD_DIR", "NOPE"}}}).find("/theorems/1"),
            std::string::npos);
  EXPECT_NE(config_error_of({{"epsilonLadder", {1.0}}}).find("/model"), std::string::npos);
  EXPECT_NE(config_error_of({{"model", "heisenberg:d=1"}, {"seed", -3}}).find("/seed"), std::string::npos);
  EXPECT_NE(config_error_of({{"model", "heisenberg:d=1"}, {"output", {{"formats", {"pdf"}}}}}).find("/output/formats/0"),
            std::string::npos);
  EXPECT_NE(config_error_of({{"model", "heisenberg:d=1"}, {"pointGrid", {{"type", "custom"}}}}).find("/pointGrid/points"),
            std::string::npos);
}

TEST(Config, UnknownModelIsModelError) {
  ScenarioConfig c = small("klein:q=2", 1);
  try {
    run_scenario(c);
    FAIL() << "expected ModelError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModelError);
    EXPECT_NE(std::string(e.what()).find("/model"), std::string::npos);
  }
}

TEST(Config, JsonRoundTrip) {
  ScenarioConfig c = small("carnot:n=4,m=2", 7);
  c.allApplicable = false;
  c.theorems = {TheoremId::GEOD_DIR, TheoremId::SUBLAP_SR};
  c.tol = {1e-7, 1e-5};
  c.output.formats = {"csv", "svg"};
  const ScenarioConfig d = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
  EXPECT_EQ(d.theorems, c.theorems);
}

TEST(Config, LoadsShippedConfigs) {
  for (const auto& e : std::filesystem::directory_iterator(HTYPE_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

TEST(Grid, CandidateStreamIsIndexable) {
  const HTypeModel M = parse_model_spec("heisenberg:d=2");
  PointGrid g;
  g.radius = 2.0;
  const auto all = grid_candidates(M, g, 9, 10);
  const auto tail = grid_candidates(M, g, 9, 4, 6);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(all[6 + k], tail[k]);
  for (const Vec& y : all) {
    const Vec xi = chart::log_frame(M, y);
    EXPECT_LE(xi.head(M.n).norm(), g.radius + 1e-12);
    EXPECT_LE(xi.tail(M.m).norm(), 0.1 * xi.head(M.n).squaredNorm() + 1e-12);
  }
  EXPECT_NE(grid_candidates(M, g, 10, 1)[0], all[0]);
}

TEST(Scenario, DeterministicAcrossRunsAndWorkers) {
  ScenarioConfig c = small("heisenberg:d=1", 3);
  const ScenarioResult a = run_scenario(c);
  const ScenarioResult b = run_scenario(c);
  c.workers = 2;
  const ScenarioResult w = run_scenario(c);
  EXPECT_EQ(records_csv(a), records_csv(b));
  EXPECT_EQ(records_csv(a), records_csv(w));
  EXPECT_EQ(a.summary.interior, 3);
  EXPECT_EQ(a.summary.fail, 0);
  EXPECT_GT(a.summary.pass, 0);
}

TEST(Scenario, CsvLayout) {
  const ScenarioResult r = run_scenario(small("heisenberg:d=1", 2));
  const std::string csv = records_csv(r);
  EXPECT_EQ(csv.rfind("# model heisenberg", 0), 0u);
  EXPECT_EQ(after_comments(csv), csv_header(r.chartDim));
  EXPECT_EQ(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')), 5 + r.records.size());
}

TEST(Scenario, ExplicitJ2TheoremsSkippedOnCarnot) {
  ScenarioConfig c = small("carnot:n=4,m=2", 2);
  c.allApplicable = false;
  c.theorems = {TheoremId::GEOD_DIR, TheoremId::RIEM_AVG, TheoremId::SUBLAP_SR};
  const ScenarioResult r = run_scenario(c);
  int skipped = 0;
  for (const auto& rec : r.records) {
    if (rec.id == TheoremId::GEOD_DIR) {
      EXPECT_EQ(rec.status, Status::Pass);
    } else {
      EXPECT_EQ(rec.status, Status::HypothesisSkipped);
      EXPECT_FALSE(rec.note.empty());
      ++skipped;
    }
  }
  EXPECT_EQ(skipped, 2 * 2 * 2);
  bool noted = false;
  for (const auto& n : r.summary.notes) noted = noted || n.find("satisfiesJ2=false") != std::string::npos;
  EXPECT_TRUE(noted);
}

TEST(Scenario, AllApplicableDropsStructuralMisfits) {
  const ScenarioResult r = run_scenario(small("carnot:n=4,m=2", 1));
  for (const auto& rec : r.records) {
    EXPECT_NE(rec.id, TheoremId::RIEM_AVG);
    EXPECT_NE(rec.id, TheoremId::SUBLAP_SR);
  }
}

TEST(Scenario, CompactModelGetsDiameterRows) {
  ScenarioConfig c = small("su2:s=1", 1);
  c.epsilonLadder = {1.0, 0.5};
  c.diameterSamples = 16;
  const ScenarioResult r = run_scenario(c);
  ASSERT_TRUE(r.diameter.has_value());
  int diam = 0;
  for (const auto& rec : r.records)
    if (is_diameter(rec.id)) {
      ++diam;
      EXPECT_NE(rec.status, Status::Fail) << theorem_name(rec.id);
    }
  EXPECT_EQ(diam, 3);
  EXPECT_EQ(r.summary.fail, 0);
}

TEST(Scenario, CustomGridEvaluatesEveryPoint) {
  ScenarioConfig c = small("heisenberg:d=1", 1);
  c.grid.type = GridType::Custom;
  c.grid.points = {{1.0, 0.2, 0.05}, {0.0, 0.0, 0.5}};
  const ScenarioResult r = run_scenario(c);
  EXPECT_EQ(r.summary.candidates, 2);
  EXPECT_EQ(r.summary.interior, 1);
  EXPECT_EQ(r.summary.excluded.size(), 1u);
}

TEST(Report, FilesAndRoundTrip) {
  const ScenarioResult r = run_scenario(small("heisenberg:d=1", 2));
  const auto dir = scratch("report");
  const auto files = emit_report(r, {"csv", "json", "dat", "svg"}, dir.string());
  const auto present = present_theorems(r);
  int svgs = 0, dats = 0;
  for (const auto& f : files) {
    svgs += std::filesystem::path(f).extension() == ".svg";
    dats += std::filesystem::path(f).extension() == ".dat";
  }
  EXPECT_EQ(svgs, static_cast<int>(present.size()));
  EXPECT_EQ(dats, static_cast<int>(present.size()));
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));

  std::ifstream in(dir / "records.json");
  const ScenarioResult back = result_from_json(nlohmann::json::parse(in));
  EXPECT_EQ(back.records.size(), r.records.size());
  EXPECT_EQ(back.summary.pass, r.summary.pass);
  for (TheoremId id : present) EXPECT_EQ(svg_text(back, id), svg_text(r, id));
  EXPECT_THROW(emit_report(r, {"pdf"}, dir.string()), Error);
  EXPECT_THROW(result_from_json(nlohmann::json{{"model", "x"}}), Error);
  std::filesystem::remove_all(dir);
}

TEST(Report, DemoConfigRunsClean) {
  ScenarioConfig c = load_config(std::string(HTYPE_CONFIG_DIR) + "/demo.json");
  const ScenarioResult r = run_scenario(c);
  EXPECT_EQ(r.summary.fail, 0);
  EXPECT_EQ(r.summary.interior, c.grid.density);
  EXPECT_GT(r.summary.pass, 0);
}
