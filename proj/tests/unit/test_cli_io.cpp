#include "hmor/error.hpp"
#include "hmor/synth.hpp"
#include "hmor_cli/commands.hpp"
#include "hmor_cli/run_config.hpp"
#include "hmor_cli/scene_file.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>

namespace hmor::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

Scene sample_scene() {
  GenSpec spec;
  spec.seed = 5;
  spec.n_persons = 2;
  return generate_scene(spec);
}

json sample_doc() { return json::parse(scene_to_json(sample_scene()).dump()); }

TEST(SceneFile, JsonRoundTripIsLossless) {
  const Scene scene = sample_scene();
  EXPECT_EQ(scene_from_json(json::parse(scene_to_json(scene).dump())), scene);
}

TEST(SceneFile, RejectsUnknownFields) {
  auto doc = sample_doc();
  doc["extra"] = 1;
  EXPECT_THROW(scene_from_json(doc), InvalidInput);
  doc = sample_doc();
  doc["persons"][0]["joints"][3]["w"] = 0.0;
  try {
    scene_from_json(doc);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("persons[0].joints[3].w"), std::string::npos);
  }
}

TEST(SceneFile, RejectsWrongVersionAndMissingFields) {
  auto doc = sample_doc();
  doc["schema_version"] = "hmor-scene/2";
  EXPECT_THROW(scene_from_json(doc), InvalidInput);
  doc = sample_doc();
  doc["persons"][1].erase("roi_area");
  EXPECT_THROW(scene_from_json(doc), InvalidInput);
  doc = sample_doc();
  doc["camera"]["fx"] = "fast";
  EXPECT_THROW(scene_from_json(doc), InvalidInput);
}

TEST(SceneFile, TopologyOverride) {
  Scene scene = sample_scene();
  scene.topology.parts.pop_back();
  const auto doc = json::parse(scene_to_json(scene).dump());
  ASSERT_TRUE(doc.contains("topology"));
  EXPECT_EQ(scene_from_json(doc).topology, scene.topology);
  EXPECT_FALSE(sample_doc().contains("topology"));
}

TEST(SceneFile, MissingFileIsIoError) {
  EXPECT_THROW(load_scene("/nonexistent/scene.json"), IoError);
}

TEST(RunConfig, DefaultsAndOverrides) {
  const auto c = run_config_from_json(json::parse(R"({
    "seed": 12,
    "hmor": {"w_part": 0.5, "part_representation": "particle", "pair_cap": 10},
    "weights": {"hmor": 3, "abs": 1},
    "solver": {"steps": 7, "free_variables": "full_pose", "step_halving": true},
    "gen": {"persons": 3, "perturbation": {"type": "gauss", "sigma_z_mm": 300}},
    "eval": {"pck_threshold_mm": 100, "audit_views": 4},
    "gradcheck": {"points": 5}
  })"));
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.solver.hmor.w_part, 0.5);
  EXPECT_EQ(c.solver.hmor.part_representation, PartRepresentation::kParticle);
  EXPECT_EQ(c.solver.hmor.pair_cap, 10u);
  EXPECT_EQ(c.solver.weights.hmor, 3.0);
  EXPECT_EQ(c.solver.steps, 7);
  EXPECT_EQ(c.solver.free_variables, FreeVariables::kFullPose);
  EXPECT_TRUE(c.solver.step_halving);
  EXPECT_EQ(c.gen.n_persons, 3);
  EXPECT_EQ(std::get<GaussPerturbation>(c.gen.perturbation).sigma_z, 300.0);
  EXPECT_EQ(c.eval.metrics.pck_threshold_mm, 100.0);
  EXPECT_EQ(c.gradcheck.points, 5);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(run_config_from_json(json::parse(R"({"sead": 1})")), InvalidInput);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"solver": {"stepz": 1}})")), InvalidInput);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"hmor": {"joint_clamp": "max"}})")),
               InvalidInput);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"solver": {"steps": "many"}})")),
               InvalidInput);
  const auto c = run_config_from_json(json::parse(R"({"solver": {"steps": 0}})"));
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(ScenePairs, DirectoryMatching) {
  const fs::path dir = fs::temp_directory_path() / "hmor_pairs_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Scene scene = sample_scene();
  save_scene(dir / "a.json", scene);
  save_scene(dir / "a.pred.json", scene);
  save_scene(dir / "b.json", scene);
  save_scene(dir / "b.pred.json", scene);
  const auto pairs = resolve_scene_pairs(dir, dir);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].name, "a");
  EXPECT_EQ(pairs[0].pred.filename(), "a.pred.json");
  EXPECT_EQ(pairs[1].gt.filename(), "b.json");
  fs::remove(dir / "b.pred.json");
  EXPECT_THROW(resolve_scene_pairs(dir, dir), IoError);
  EXPECT_THROW(resolve_scene_pairs(dir, dir / "a.json"), InvalidInput);
  fs::remove_all(dir);
}

TEST(RequireCompatible, NamesField) {
  const Scene gt = sample_scene();
  Scene pred = gt;
  pred.topology.parts.pop_back();
  try {
    require_compatible(pred, gt, true);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("topology.parts"), std::string::npos);
  }
  pred = gt;
  pred.persons.pop_back();
  EXPECT_NO_THROW(require_compatible(pred, gt, false));
  EXPECT_THROW(require_compatible(pred, gt, true), InvalidInput);
}

TEST(ParallelFor, VisitsAllAndRethrowsLowestIndex) {
  std::atomic<int> sum{0};
  parallel_for(100, 4, [&](std::size_t i) { sum += static_cast<int>(i); });
  EXPECT_EQ(sum.load(), 4950);
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) throw InvalidInput("bad " + std::to_string(i));
    });
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_STREQ(e.what(), "bad 7");
  }
}

}  // namespace
}  // namespace hmor::cli
