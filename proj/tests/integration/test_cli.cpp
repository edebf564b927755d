#include "hmor_cli/scene_file.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct CliRun {
  int code;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hmor_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt";
    const std::string cmd = std::string(HMOR_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, hmor::cli::read_text(out)};
  }

  std::string p(const std::string& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST_F(Cli, GenIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(run("gen --seed 7 --persons 3 --count 2 --out " + p("a")).code, 0);
  ASSERT_EQ(run("gen --seed 7 --persons 3 --count 2 --out " + p("b")).code, 0);
  for (const char* f : {"scene_0000.json", "scene_0001.json"}) {
    EXPECT_EQ(hmor::cli::read_text(dir_ / "a" / f), hmor::cli::read_text(dir_ / "b" / f));
  }
  const auto scene = hmor::cli::load_scene(dir_ / "a" / "scene_0000.json");
  EXPECT_EQ(scene.person_count(), 3);
}

TEST_F(Cli, GenRejectsZeroPersons) {
  EXPECT_EQ(run("gen --persons 0 --out " + p("a")).code, 2);
}

TEST_F(Cli, GenUnwritablePathIsIoError) {
  std::ofstream(p("file")) << "x";
  EXPECT_EQ(run("gen --out " + p("file/sub")).code, 3);
}

TEST_F(Cli, LossIsZeroOnTruth) {
  ASSERT_EQ(run("gen --seed 1 --persons 2 --out " + p("s")).code, 0);
  const auto r = run("loss --format json --pred " + p("s/scene_0000.json") + " --gt " + p("s/scene_0000.json"));
  ASSERT_EQ(r.code, 0);
  const auto row = json::parse(r.out)["rows"][0];
  for (const char* k : {"total", "hmor", "hmor_instance", "hmor_part", "hmor_joint", "pose", "init",
                        "refine", "abs"}) {
    EXPECT_EQ(row[k].get<double>(), 0.0) << k;
  }
}

TEST_F(Cli, LossOnSwappedFixtureMatchesHandValue) {
  ASSERT_EQ(run("gen --seed 3 --persons 2 --perturb swap --swap 0:1 --out " + p("s")).code, 0);
  const auto gt = hmor::cli::load_scene(dir_ / "s" / "scene_0000.json");
  const auto r = run("loss --format json --pred " + p("s/scene_0000.pred.json") + " --gt " + p("s/scene_0000.json"));
  ASSERT_EQ(r.code, 0);
  // Hand value: swapping root depths moves each person's mean depth by the
  // root difference, so the predicted wrong-order gap is the ground-truth gap.
  double mean[2] = {0, 0};
  for (int m = 0; m < 2; ++m) {
    const auto& person = gt.persons[static_cast<std::size_t>(m)];
    for (const auto& j : person.joints) mean[m] += j.z_rel + person.root_depth;
    mean[m] /= static_cast<double>(person.joints.size());
  }
  const double shift = gt.persons[1].root_depth - gt.persons[0].root_depth;
  const double gt_gap = mean[0] - mean[1];
  const double pred_gap = (mean[0] + shift) - (mean[1] - shift);
  ASSERT_LT(gt_gap * pred_gap, 0.0) << "fixture must flip the order";
  const double expected = std::log1p(std::abs(pred_gap) / 1000.0);
  EXPECT_NEAR(json::parse(r.out)["rows"][0]["hmor_instance"].get<double>(), expected, 1e-9);
}

TEST_F(Cli, LossMissingFileIsIoError) {
  EXPECT_EQ(run("loss --format json --pred " + p("nope.json") + " --gt " + p("nope.json")).code, 3);
}

TEST_F(Cli, LossTopologyMismatchNamesField) {
  ASSERT_EQ(run("gen --seed 1 --persons 2 --out " + p("s")).code, 0);
  auto doc = json::parse(hmor::cli::read_text(dir_ / "s" / "scene_0000.json"));
  doc["topology"] = {{"joints", 17}, {"root_index", 0}, {"parts", {{0, 1}, {1, 2}}}};
  hmor::cli::write_text(dir_ / "other.json", doc.dump());
  EXPECT_EQ(run("loss --format json --pred " + p("other.json") + " --gt " + p("s/scene_0000.json")).code, 2);
  EXPECT_NE(hmor::cli::read_text(dir_ / "stderr.txt").find("topology.parts"), std::string::npos);
}

TEST_F(Cli, RefineResolvesSwapAndWritesTrace) {
  ASSERT_EQ(run("gen --seed 3 --persons 2 --perturb swap --swap 0:1 --out " + p("s")).code, 0);
  std::ofstream(p("cfg.json")) << R"({"weights": {"pose": 0, "init": 0, "refine": 0, "hmor": 1},
                                       "solver": {"steps": 300, "step_size": 1.0}})";
  const auto r = run("refine --config " + p("cfg.json") + " --pred " + p("s/scene_0000.pred.json") +
                     " --gt " + p("s/scene_0000.json") + " --out " + p("ref.json"));
  ASSERT_EQ(r.code, 0) << hmor::cli::read_text(dir_ / "stderr.txt");
  const auto rows = parse_csv(hmor::cli::read_text(dir_ / "ref.trace.csv"));
  ASSERT_EQ(rows.front(), (std::vector<std::string>{"step", "value", "violations"}));
  EXPECT_EQ(rows.size(), 302u);
  EXPECT_GT(std::stoll(rows[1][2]), 0);
  EXPECT_LT(std::stod(rows.back()[1]), 1e-3 * std::stod(rows[1][1]));
  const auto e = run("eval --format json --pred " + p("ref.json") + " --gt " + p("s/scene_0000.json"));
  ASSERT_EQ(e.code, 0);
  EXPECT_EQ(json::parse(e.out)["rows"][0]["violations_instance"].get<double>(), 0.0);
}

TEST_F(Cli, RefineRejectsZeroSteps) {
  ASSERT_EQ(run("gen --seed 3 --persons 2 --out " + p("s")).code, 0);
  EXPECT_EQ(run("refine --steps 0 --pred " + p("s/scene_0000.json") + " --gt " +
                p("s/scene_0000.json") + " --out " + p("r.json"))
                .code,
            2);
}

TEST_F(Cli, RefineHalvingTraceMonotone) {
  ASSERT_EQ(run("gen --seed 4 --persons 3 --perturb gauss --sigma-z 300 --out " + p("s")).code, 0);
  ASSERT_EQ(run("refine --halving --views 4 --steps 60 --step-size 5 --pred " +
                p("s/scene_0000.pred.json") + " --gt " + p("s/scene_0000.json") + " --out " +
                p("r.json"))
                .code,
            0);
  const auto rows = parse_csv(hmor::cli::read_text(dir_ / "r.trace.csv"));
  for (std::size_t k = 2; k < rows.size(); ++k) {
    EXPECT_LE(std::stod(rows[k][1]), std::stod(rows[k - 1][1]));
  }
}

TEST_F(Cli, RefineIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(run("gen --seed 5 --persons 3 --perturb gauss --sigma-z 300 --out " + p("s")).code, 0);
  const std::string base = "refine --seed 9 --views 3 --steps 40 --pred " +
                           p("s/scene_0000.pred.json") + " --gt " + p("s/scene_0000.json");
  ASSERT_EQ(run(base + " --out " + p("r1.json")).code, 0);
  ASSERT_EQ(run(base + " --out " + p("r2.json")).code, 0);
  EXPECT_EQ(hmor::cli::read_text(dir_ / "r1.json"), hmor::cli::read_text(dir_ / "r2.json"));
  EXPECT_EQ(hmor::cli::read_text(dir_ / "r1.trace.csv"), hmor::cli::read_text(dir_ / "r2.trace.csv"));
}

TEST_F(Cli, EvalPerfectAndFormatsAgree) {
  ASSERT_EQ(run("gen --seed 6 --persons 3 --count 3 --perturb gauss --sigma-z 200 --out " + p("s")).code, 0);
  const auto truth = run("eval --format json --pred " + p("s/scene_0000.json") + " --gt " + p("s/scene_0000.json"));
  ASSERT_EQ(truth.code, 0);
  const auto row = json::parse(truth.out)["rows"][0];
  EXPECT_EQ(row["mpjpe"].get<double>(), 0.0);
  EXPECT_EQ(row["pck_rel"].get<double>(), 100.0);
  EXPECT_EQ(row["auc_rel"].get<double>(), 100.0);

  ASSERT_EQ(run("eval --jobs 3 --pred " + p("s") + " --gt " + p("s") + " --out " + p("rep")).code, 0);
  const auto doc = json::parse(hmor::cli::read_text(dir_ / "rep" / "report.json"));
  const auto csv = parse_csv(hmor::cli::read_text(dir_ / "rep" / "report.csv"));
  ASSERT_EQ(doc["rows"].size() + 1, csv.size());
  for (std::size_t r = 0; r < doc["rows"].size(); ++r) {
    for (std::size_t c = 0; c < csv[0].size(); ++c) {
      const auto& v = doc["rows"][r][csv[0][c]];
      if (v.is_string()) {
        EXPECT_EQ(v.get<std::string>(), csv[r + 1][c]);
      } else {
        EXPECT_EQ(v.get<double>(), std::stod(csv[r + 1][c])) << csv[0][c];
      }
    }
  }
  EXPECT_EQ(doc["pck_curve"].size(), 150u);
  EXPECT_TRUE(fs::exists(dir_ / "rep" / "pck_curve.csv"));
}

TEST_F(Cli, EvalJobsDoNotChangeOutput) {
  ASSERT_EQ(run("gen --seed 8 --persons 2 --count 4 --perturb gauss --sigma-z 200 --out " + p("s")).code, 0);
  const auto a = run("eval --format csv --jobs 1 --pred " + p("s") + " --gt " + p("s"));
  const auto b = run("eval --format csv --jobs 4 --pred " + p("s") + " --gt " + p("s"));
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, EvalHalfDisplacedGivesPckFifty) {
  ASSERT_EQ(run("gen --seed 9 --persons 2 --out " + p("s")).code, 0);
  auto doc = json::parse(hmor::cli::read_text(dir_ / "s" / "scene_0000.json"));
  doc["persons"][1]["root_depth_mm"] = doc["persons"][1]["root_depth_mm"].get<double>() + 400.0;
  hmor::cli::write_text(dir_ / "pred.json", doc.dump());
  const auto r = run("eval --format json --pred " + p("pred.json") + " --gt " + p("s/scene_0000.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["rows"][0]["pck_abs"].get<double>(), 50.0);
}

TEST_F(Cli, EvalEmptySceneIsValidationError) {
  ASSERT_EQ(run("gen --seed 9 --persons 2 --out " + p("s")).code, 0);
  auto doc = json::parse(hmor::cli::read_text(dir_ / "s" / "scene_0000.json"));
  doc["persons"] = json::array();
  hmor::cli::write_text(dir_ / "empty.json", doc.dump());
  EXPECT_EQ(run("eval --format json --pred " + p("empty.json") + " --gt " + p("s/scene_0000.json")).code, 2);
}

TEST_F(Cli, GradcheckPassesAndIsReproducible) {
  const auto a = run("gradcheck --seed 3 --points 10");
  const auto b = run("gradcheck --seed 3 --points 10");
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  const auto rows = parse_csv(a.out);
  EXPECT_EQ(rows.size(), 10u);
  for (std::size_t r = 1; r < rows.size(); ++r) EXPECT_EQ(rows[r][4], "pass") << rows[r][0];
}

TEST_F(Cli, DefaultFormatsPerSubcommand) {
  ASSERT_EQ(run("gen --seed 1 --persons 2 --out " + p("s")).code, 0);
  const std::string files = " --pred " + p("s/scene_0000.json") + " --gt " + p("s/scene_0000.json");
  EXPECT_NO_THROW(json::parse(run("loss" + files).out));
  EXPECT_NO_THROW(json::parse(run("eval" + files).out));
  EXPECT_EQ(run("gradcheck --points 1").out.rfind("term,", 0), 0u);
}

TEST_F(Cli, UnknownConfigKeyIsValidationError) {
  std::ofstream(p("cfg.json")) << R"({"solver": {"stepz": 3}})";
  EXPECT_EQ(run("gradcheck --config " + p("cfg.json")).code, 2);
}

}  // namespace
