#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/report.hpp"
#include "forge/dataset.hpp"
#include "forge/model_io.hpp"

namespace fs = std::filesystem;
using forge::cli::Json;

namespace {

const std::string kTrain = "blobs:classes=3,dim=8,count=300,seed=5";
const std::string kTest = "blobs:classes=3,dim=8,count=120,seed=5,split=test";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("forge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the real executable; returns its exit status.
  int run(const std::string& args) {
    const std::string cmd = std::string("\"") + FORGE_CLI_PATH + "\" " + args + " > \"" + path("stdout.txt") +
                            "\" 2> \"" + path("stderr.txt") + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const std::string& p) const {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  Json report(const std::string& p) const { return forge::cli::read_report(p); }

  void train_model(const std::string& out, const std::string& extra = "") {
    ASSERT_EQ(run("train --data " + kTrain + " --test-data " + kTest + " --arch mlp:8,16,3 --epochs 4 --out " +
                  path(out) + " --seed 1 --report " + path(out + ".json") + " " + extra),
              0)
        << slurp(path("stderr.txt"));
  }

  fs::path dir_;
};

}  // namespace

TEST(CliParse, NumbersAndFractions) {
  EXPECT_DOUBLE_EQ(forge::cli::parse_number("8/255"), 8.0 / 255.0);
  EXPECT_EQ(forge::cli::parse_number("0.5"), 0.5);
  EXPECT_THROW(forge::cli::parse_number("1/0"), forge::ConfigError);
  EXPECT_THROW(forge::cli::parse_number("abc"), forge::ConfigError);
}

TEST_F(Cli, MissingDatasetFailsBeforeCompute) {
  EXPECT_EQ(run("train --data " + path("nope.dataset") + " --out " + path("m.model")), 3);
  EXPECT_FALSE(fs::exists(path("m.model")));
  EXPECT_NE(slurp(path("stderr.txt")).find("nope.dataset"), std::string::npos);
}

TEST_F(Cli, TrainIsByteDeterministicAndReportsLossCurve) {
  train_model("a.model");
  train_model("b.model");
  EXPECT_EQ(slurp(path("a.model")), slurp(path("b.model")));
  const Json r = report(path("a.model.json"));
  EXPECT_EQ(r["tables"]["loss_curve"].size(), 4u);
  // Payloads differ only in the output path.
  auto without_paths = [](Json j) {
    j = forge::cli::report_payload(j);
    j["config"].erase("out");
    j["summary"].erase("model");
    return j.dump();
  };
  EXPECT_EQ(without_paths(r), without_paths(report(path("b.model.json"))));
}

TEST_F(Cli, SeedFromEnvironment) {
  const std::string base = "train --data " + kTrain + " --arch mlp:8,16,3 --epochs 1 --out ";
  ASSERT_EQ(run(base + path("flag.model") + " --seed 9"), 0);
  ASSERT_EQ(run("") , 2);
  const std::string env_cmd = "FORGE_SEED=9 ";
  const std::string cmd = env_cmd + "\"" + FORGE_CLI_PATH + "\" " + base + path("env.model") + " > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(slurp(path("flag.model")), slurp(path("env.model")));
}

TEST_F(Cli, CalibrateZeroRatioIsBitIdentical) {
  train_model("orig.model");
  ASSERT_EQ(run("calibrate --model " + path("orig.model") + " --data " + kTrain + " --c-ratio 0 --out " +
                path("forged.model") + " --report " + path("cal.json")),
            0);
  const auto orig = forge::load_model(path("orig.model"));
  const auto forged = forge::load_model(path("forged.model"));
  const auto test = forge::synth_blobs({3, 8, 120, 1.0, 5}, forge::Split::test);
  EXPECT_TRUE(forge::bitwise_equal(orig.forward(test.inputs()), forged.forward(test.inputs())));
  EXPECT_EQ(report(path("cal.json"))["summary"]["backward_passes"], 0);
}

TEST_F(Cli, CalibrateGridWritesSuffixedModelsAndAblation) {
  train_model("orig.model");
  ASSERT_EQ(run("calibrate --model " + path("orig.model") + " --data " + kTrain + " --eval-data " + kTest +
                " --out " + path("forged.model") + " --report " + path("cal.json")),
            0)
      << slurp(path("stderr.txt"));
  for (const char* suffix : {"0.00390625", "0.0078125", "0.015625"})
    EXPECT_TRUE(fs::exists(path(std::string("forged.cr") + suffix + ".model"))) << suffix;
  const Json r = report(path("cal.json"));
  EXPECT_EQ(r["tables"]["ablation"].size(), 4u);
  EXPECT_EQ(r["summary"]["masked_le_unmasked_fraction"], 1.0);
  EXPECT_EQ(r["summary"]["backward_passes"], 0);
}

TEST_F(Cli, BoundsMaskedWithinUnmasked) {
  train_model("orig.model");
  ASSERT_EQ(run("calibrate --model " + path("orig.model") + " --data " + kTrain + " --c-ratio 1/64 --out " +
                path("forged.model")),
            0);
  ASSERT_EQ(run("bounds --model " + path("forged.model") + " --data " + kTest + " --per-sample --report " +
                path("b.json")),
            0);
  const Json r = report(path("b.json"));
  EXPECT_TRUE(r["summary"]["masked_le_unmasked_all"].get<bool>());
  for (const auto& row : r["tables"]["per_sample"])
    EXPECT_LE(row["masked_bound"].get<double>(), row["unmasked_bound"].get<double>());
}

TEST_F(Cli, AttackAtZeroEpsilonKeepsCleanAccuracy) {
  train_model("orig.model");
  ASSERT_EQ(run("attack --model " + path("orig.model") + " --data " + kTest + " --epsilon 0 --csv " +
                path("a.csv") + " --dump-adversarial " + path("adv.dataset") + " --report " + path("a.json")),
            0);
  const Json r = report(path("a.json"));
  for (const auto& row : r["tables"]["attacks"]) EXPECT_EQ(row["robust_accuracy"], row["clean_accuracy"]);
  EXPECT_TRUE(fs::exists(path("a.csv")));
  const auto adv = forge::load_dataset(path("adv.dataset"));
  EXPECT_EQ(adv.values, forge::synth_blobs({3, 8, 120, 1.0, 5}, forge::Split::test).values);
}

TEST_F(Cli, SmoothFirstRadiusIsSmoothedAccuracy) {
  train_model("orig.model");
  ASSERT_EQ(run("smooth --model " + path("orig.model") + " --data " + kTest +
                " --n 200 --limit 30 --radii 0,0.1,0.3 --report " + path("s.json")),
            0);
  const Json r = report(path("s.json"));
  EXPECT_EQ(r["tables"]["curve"][0]["certified_accuracy"], r["summary"]["smoothed_accuracy"]);
}

TEST_F(Cli, VerifyMaskingZeroRatioTransferIsExact) {
  train_model("orig.model");
  ASSERT_EQ(run("calibrate --model " + path("orig.model") + " --data " + kTrain + " --c-ratio 0 --out " +
                path("forged.model")),
            0);
  ASSERT_EQ(run("verify-masking --original " + path("orig.model") + " --forged " + path("forged.model") +
                " --data " + kTest + " --n 200 --smooth-limit 20 --report " + path("v.json")),
            0)
      << slurp(path("stderr.txt"));
  const Json r = report(path("v.json"));
  const Json& item4 = r["sections"]["item4"];
  EXPECT_EQ(item4["verdict"], "PASS");
  EXPECT_EQ(item4["data"]["direct_accuracy_original"], item4["data"]["transfer_accuracy_forged"]);
  EXPECT_EQ(r["sections"]["item2"]["verdict"], "PASS");
  EXPECT_EQ(r["sections"]["item5"]["verdict"], "PASS");

  ASSERT_EQ(run("report " + path("v.json") + " --csv-dir " + dir_.string()), 0);
  EXPECT_TRUE(fs::exists(path("item2.csv")));
  ASSERT_EQ(run("verify-masking --original " + path("orig.model") + " --forged " + path("forged.model") +
                " --data " + kTest + " --n 200 --smooth-limit 20 --report " + path("v2.json")),
            0);
  EXPECT_EQ(forge::cli::report_payload(r).dump(), forge::cli::report_payload(report(path("v2.json"))).dump());
}

TEST_F(Cli, ExitCodes) {
  train_model("orig.model");
  EXPECT_EQ(run("attack --model " + path("orig.model") + " --data " + kTest + " --bogus-flag"), 2);
  EXPECT_EQ(run("attack --model " + path("orig.model") + " --data blobs:dim=8,separation=-1"), 2);
  std::ofstream(path("bad.model")) << "forge-model 1\nname x\n";
  EXPECT_EQ(run("bounds --model " + path("bad.model") + " --data " + kTest), 3);
  EXPECT_EQ(run("bounds --model " + path("orig.model") + " --data blobs:dim=5"), 5);
  EXPECT_EQ(run("train --data " + kTrain + " --epochs 1 --lr 1e300 --out " + path("x.model")), 4);
  std::ofstream(path("bad.json")) << "{\"schema\": \"forge-report\", \"schema_version\": 7}";
  EXPECT_EQ(run("report " + path("bad.json")), 3);
  EXPECT_EQ(run("calibrate --model " + path("orig.model") + " --data " + kTrain + " --insert 9 --c-ratio 0 --out " +
                path("f.model")),
            5);
}
