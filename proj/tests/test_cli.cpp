#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace graspforge;
namespace fs = std::filesystem;

namespace {

Json base_config() {
  return Json::parse(R"({
    "schema_version": "1.0",
    "object": {"id": "ball", "mesh": "@fixtures/meshes/icosphere_s2.obj", "mass": 0.1,
               "position": [0.45, 0.0, 0.04]},
    "table_height": 0.0,
    "strategy": "WholeHand",
    "n": 2,
    "seed": 5,
    "optimizer": {"max_iterations": 15},
    "output": "unused"
  })");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("graspforge_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const Json& j) {
  const fs::path p = dir / "run.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

TriMesh fixture_mesh(const std::string& name) {
  return load_mesh((oracle::fixtures() / "meshes" / name).string());
}

}  // namespace

TEST(Config, ParsesFixtureConfigs) {
  for (const char* name : {"icosphere_wholehand.json", "box_auto.json", "cluttered_icosphere.json"}) {
    const RunConfig c = load_run_config(oracle::fixtures() / "configs" / name);
    EXPECT_TRUE(fs::exists(c.object.path)) << name;
    EXPECT_TRUE(fs::exists(c.hand_path));
    EXPECT_TRUE(fs::exists(c.arm_path));
    EXPECT_FALSE(c.snapshot.contains("output"));
  }
  const RunConfig c = load_run_config(oracle::fixtures() / "configs/icosphere_wholehand.json");
  EXPECT_EQ(c.object.id, "icosphere");
  EXPECT_EQ(c.n, 64);
  EXPECT_EQ(c.cone.mu, 0.6);
  EXPECT_EQ(c.output, fs::path("out/icosphere"));
  EXPECT_LE((c.object.pose.translation - Vec3(0.45, 0, 0.04)).norm(), 1e-15);
  EXPECT_EQ(c.seed_list().size(), 64u);
  EXPECT_EQ(c.seed_list().back(), 63u);
  const RunConfig cl = load_run_config(oracle::fixtures() / "configs/cluttered_icosphere.json");
  ASSERT_EQ(cl.scene.size(), 1u);
  EXPECT_EQ(cl.scene[0].id, "small_box");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  const fs::path base = oracle::fixtures() / "configs";
  auto expect_bad = [&](Json j) { EXPECT_THROW(parse_run_config(j, base), ConfigError) << j.dump(); };
  Json j = base_config();
  j["colour"] = "red";
  expect_bad(j);
  j = base_config();
  j["object"]["scale"] = 2;
  expect_bad(j);
  j = base_config();
  j["cone"] = Json{{"mu", 0.5}, {"edges", 8}};
  expect_bad(j);
  j = base_config();
  j["object"]["mesh"] = "@fixtures/meshes/missing.obj";
  expect_bad(j);
  j = base_config();
  j["object"]["mass"] = 0.0;
  expect_bad(j);
  j = base_config();
  j["n"] = 0;
  expect_bad(j);
  j = base_config();
  j["schema_version"] = "2.0";
  expect_bad(j);
  j = base_config();
  j.erase("schema_version");
  expect_bad(j);
  j = base_config();
  j["object"]["position"] = Json::array({1, 2});
  expect_bad(j);
  j = base_config();
  j["targets"] = Json::array();
  expect_bad(j);
  j = base_config();
  j["arm_mounts"] = Json::array({Json::object()});
  expect_bad(j);
  j = base_config();
  j["strategy"] = "Grab";
  expect_bad(j);
  j = base_config();
  j["cone"] = Json{{"mu", -1.0}};
  EXPECT_THROW(parse_run_config(j, base), ValidationError);
}

TEST(Config, MissingFileOrBadJsonIsConfigError) {
  EXPECT_THROW(load_run_config("/nonexistent/run.json"), ConfigError);
  const fs::path dir = scratch("badjson");
  std::ofstream(dir / "run.json") << "{ nope";
  EXPECT_THROW(load_run_config(dir / "run.json"), ConfigError);
}

TEST(Config, RelativeInputsResolveAgainstConfigDirectory) {
  const fs::path dir = scratch("relative");
  fs::copy_file(oracle::fixtures() / "meshes/icosphere_s1.obj", dir / "thing.obj");
  Json j = base_config();
  j["object"]["mesh"] = "thing.obj";
  const RunConfig c = parse_run_config(j, dir);
  EXPECT_EQ(c.object.path, dir / "thing.obj");
  EXPECT_EQ(c.output, fs::path("unused"));
}

TEST(Config, OverridesUpdateConfigAndSnapshot) {
  Json j = base_config();
  j["seeds"] = Json::array({7, 9});
  RunConfig c = parse_run_config(j, ".");
  EXPECT_EQ(c.seed_list(), (std::vector<std::uint64_t>{7, 9}));
  apply_overrides(c, Overrides{11, "Pinch2", fs::path("elsewhere")});
  EXPECT_EQ(c.seed_list(), (std::vector<std::uint64_t>{11, 12}));
  EXPECT_EQ(c.strategy, "Pinch2");
  EXPECT_EQ(c.output, fs::path("elsewhere"));
  EXPECT_EQ(c.snapshot.at("seed"), 11);
  EXPECT_FALSE(c.snapshot.contains("seeds"));
  EXPECT_EQ(c.snapshot.at("strategy"), "Pinch2");
  EXPECT_FALSE(c.snapshot.contains("output"));
  EXPECT_THROW(apply_overrides(c, Overrides{std::nullopt, "Grab", std::nullopt}), ConfigError);
}

TEST(AutoStrategy, SizeAndMassHeuristic) {
  const double span = oracle::hand().span;
  EXPECT_EQ(auto_strategy(fixture_mesh("box_large.obj"), 1.5, span), GraspStrategy::Bimanual);
  EXPECT_EQ(auto_strategy(fixture_mesh("box_small.obj"), 0.05, span), GraspStrategy::Pinch2);
  EXPECT_EQ(auto_strategy(fixture_mesh("icosphere_s3.obj"), 0.1, span), GraspStrategy::WholeHand);
  EXPECT_EQ(auto_strategy(fixture_mesh("icosphere_s3.obj"), 2.0, span), GraspStrategy::Bimanual);
}

TEST(Pipeline, BuildsSceneAndStrategy) {
  const Pipeline p = build_pipeline(load_run_config(oracle::fixtures() / "configs/box_auto.json"));
  EXPECT_EQ(p.strategy, GraspStrategy::Bimanual);
  EXPECT_EQ(p.scene.objects.size(), 1u);
  const Pipeline q =
      build_pipeline(load_run_config(oracle::fixtures() / "configs/cluttered_icosphere.json"));
  EXPECT_EQ(q.strategy, GraspStrategy::WholeHand);
  ASSERT_EQ(q.scene.objects.size(), 2u);
  EXPECT_EQ(q.scene.objects[1].id, "small_box");

  Json j = base_config();
  j["scene"] = Json::array({Json{{"id", "ball"}, {"mesh", "@fixtures/meshes/box_small.obj"}}});
  EXPECT_THROW(build_pipeline(parse_run_config(j, ".")), ConfigError);
}

TEST(Stats, EmptyAndMissingDatasets) {
  EXPECT_EQ(stats_report({}), "0 records\n");
  std::ostringstream out, err;
  const fs::path empty = scratch("stats_empty");
  EXPECT_EQ(cmd_stats(empty, out, err), kExitOk);
  EXPECT_EQ(out.str(), "0 records\n");
  EXPECT_EQ(cmd_stats(empty / "nope", out, err), kExitConfig);
}

TEST(Stats, CountsPerStrategy) {
  std::vector<DemoRecord> records(3);
  records[0].strategy = GraspStrategy::Pinch2, records[0].grasp_energy = 1.0;
  records[1].strategy = GraspStrategy::Pinch2, records[1].grasp_energy = 3.0;
  records[2].strategy = GraspStrategy::Bimanual, records[2].grasp_energy = 2.0;
  records[0].validation.success = true;
  const std::string s = stats_report(records);
  EXPECT_NE(s.find("3 records, 1 successful, success rate 0.333"), std::string::npos) << s;
  EXPECT_NE(s.find("Pinch2    2 records, 1 successful, success rate 0.500, energy min 1 median 2 max 3"),
            std::string::npos)
      << s;
  EXPECT_NE(s.find("Bimanual  1 records"), std::string::npos) << s;
  EXPECT_EQ(s.find("Tripod3"), std::string::npos);
}

TEST(InspectMesh, ReportsPropertiesAndErrors) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_inspect_mesh(oracle::fixtures() / "meshes/unit_cube.obj", 0.1, out, err), kExitOk);
  const std::string s = out.str();
  EXPECT_NE(s.find("vertices 8, faces 12, watertight yes"), std::string::npos) << s;
  EXPECT_NE(s.find("surface area 6 m^2"), std::string::npos) << s;
  EXPECT_NE(s.find("volume 1 m^3"), std::string::npos) << s;
  EXPECT_NE(s.find("auto strategy"), std::string::npos);
  EXPECT_EQ(cmd_inspect_mesh("/nonexistent.obj", std::nullopt, out, err), kExitConfig);
  EXPECT_NE(err.str().find("mesh not found"), std::string::npos);
}

TEST(Commands, MissingConfigExitsWithConfigError) {
  std::ostringstream out, err;
  CommandOptions o;
  o.config = "/nonexistent/run.json";
  EXPECT_EQ(cmd_synthesize(o, out, err), kExitConfig);
  EXPECT_EQ(cmd_select(o, out, err), kExitConfig);
  EXPECT_EQ(cmd_demo(o, out, err), kExitConfig);
}

TEST(Commands, SynthesizeThenSelectWritesFiles) {
  const fs::path dir = scratch("pipeline");
  CommandOptions o;
  o.config = write_config(dir, base_config());
  o.overrides.out = dir / "out";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_synthesize(o, out, err), kExitOk) << err.str();
  const RunConfig cfg = detail::load_with_overrides(o);
  const Json batch = Json::parse(oracle::read_file(batch_path(cfg)));
  const CandidateBatch cands = batch_from_json(batch);
  ASSERT_EQ(cands.size(), 2u);
  EXPECT_EQ(cands[0].seed, 5u);
  EXPECT_EQ(cands[1].seed, 6u);
  for (const auto& c : cands) EXPECT_LT(c.energy.total, c.initial_energy.total);

  const int code = cmd_select(o, out, err);
  EXPECT_TRUE(code == kExitOk || code == kExitEmptySelection) << err.str();
  const Json sel = Json::parse(oracle::read_file(selection_path(cfg)));
  EXPECT_TRUE(sel.contains("preferred"));

  // A second synthesize gives the same bytes.
  const std::string first = oracle::read_file(batch_path(cfg));
  ASSERT_EQ(cmd_synthesize(o, out, err), kExitOk);
  EXPECT_EQ(oracle::read_file(batch_path(cfg)), first);

  // Demo without a selection file is a config error.
  CommandOptions d = o;
  d.selection = dir / "missing.json";
  EXPECT_EQ(cmd_demo(d, out, err), kExitConfig);
}
