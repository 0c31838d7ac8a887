#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "famus/cli.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "famus");
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (std::string& a : args) argv.push_back(a.data());
  return famus::cli_main(static_cast<int>(argv.size()), argv.data());
}

// Fresh scratch directory per test so overwrite checks never cross-talk.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const ::testing::TestInfo* info =
        ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("famus-cli-") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  std::string write_file(const std::string& name, const std::string& body) {
    const std::string p = path(name);
    std::ofstream out(p);
    out << body;
    return p;
  }

  fs::path dir_;
};

const char* kSmokeConfig = "configs/smoke.json";

}  // namespace

TEST_F(CliTest, RunWritesStreamAndSummary) {
  ASSERT_EQ(run_cli({"run", "--config", kSmokeConfig, "--out", dir_.string()}),
            0);
  const fs::path stream = dir_ / "famus-seed7.csv";
  const fs::path summary = dir_ / "famus-seed7.summary.json";
  ASSERT_TRUE(fs::exists(stream));
  ASSERT_TRUE(fs::exists(summary));

  const famus::ParsedStream parsed = famus::read_stream_csv(stream);
  EXPECT_EQ(parsed.schema, famus::kStreamSchema);
  EXPECT_EQ(parsed.rows.size(), static_cast<std::size_t>((150 - 30) * 5));

  std::ifstream in(summary);
  const nlohmann::json j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("schema"), famus::kSummarySchema);
  EXPECT_EQ(j.at("policy"), "famus");
  EXPECT_EQ(j.at("config").at("servers"), 4);
  EXPECT_EQ(j.at("releases"), 12);
  ASSERT_TRUE(j.contains("delegation_frequency"));
  EXPECT_EQ(j.at("delegation_frequency").size(), 4u);
}

TEST_F(CliTest, RunRefusesToOverwriteWithoutForce) {
  ASSERT_EQ(run_cli({"run", "--config", kSmokeConfig, "--out", dir_.string()}),
            0);
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"run", "--config", kSmokeConfig, "--out", dir_.string()}),
            1);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("refusing to overwrite"), std::string::npos);
  EXPECT_NE(err.find("--force"), std::string::npos);
  EXPECT_EQ(run_cli({"run", "--config", kSmokeConfig, "--out", dir_.string(),
                     "--force"}),
            0);
}

TEST_F(CliTest, RunHonoursSeedAndPolicyOverrides) {
  ASSERT_EQ(run_cli({"run", "--config", kSmokeConfig, "--out", dir_.string(),
                     "--seed", "11", "--policy", "random"}),
            0);
  EXPECT_TRUE(fs::exists(dir_ / "random-seed11.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "random-seed11.summary.json"));
}

TEST_F(CliTest, RunFallsBackToTheEnvironmentOutDir) {
  const fs::path env_dir = dir_ / "from-env";
  ASSERT_EQ(setenv("FAMUS_OUT_DIR", env_dir.c_str(), 1), 0);
  const int rc = run_cli({"run", "--config", kSmokeConfig});
  unsetenv("FAMUS_OUT_DIR");
  ASSERT_EQ(rc, 0);
  EXPECT_TRUE(fs::exists(env_dir / "famus-seed7.csv"));
}

TEST_F(CliTest, RunRejectsUnknownPolicy) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"run", "--config", kSmokeConfig, "--out", dir_.string(),
                     "--policy", "oracle"}),
            1);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("unknown policy"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagIsAParseError) {
  EXPECT_NE(run_cli({"run", "--config", kSmokeConfig, "--frobnicate"}), 0);
}

TEST_F(CliTest, MissingSubcommandFails) { EXPECT_NE(run_cli({}), 0); }

TEST_F(CliTest, ValidateAcceptsTheShippedConfigs) {
  EXPECT_EQ(run_cli({"validate", "--config", "configs/default.json"}), 0);
  EXPECT_EQ(run_cli({"validate", "--config", kSmokeConfig}), 0);
}

TEST_F(CliTest, ValidateListsEveryConfigProblem) {
  const std::string bad = write_file("bad.json", R"({
    "servers": 4, "tasks": 9, "balance_v": -2.0
  })");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"validate", "--config", bad}), 1);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("2 problem(s)"), std::string::npos);
  EXPECT_NE(out.find("tasks must not exceed servers"), std::string::npos);
  EXPECT_NE(out.find("balance_v must be >= 0"), std::string::npos);
}

TEST_F(CliTest, ValidateRejectsUnknownConfigKeys) {
  const std::string bad = write_file("typo.json", R"({"serverz": 4})");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"validate", "--config", bad}), 1);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("serverz"), std::string::npos);
}

TEST_F(CliTest, ValidateAcceptsAFeasibleMenu) {
  const std::string menu = write_file("menu.json", R"({
    "type_values": [1.0, 2.0, 4.0],
    "items": [
      {"participation": 0.0, "reward": 0.0},
      {"participation": 0.0, "reward": 0.0},
      {"participation": 1.0, "reward": 0.25}
    ]
  })");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"validate", "--menu", menu}), 0);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("implementability: ok"), std::string::npos);
  EXPECT_NE(out.find("ic/ir: ok"), std::string::npos);
}

TEST_F(CliTest, ValidateFlagsABrokenMenu) {
  // Rewards fall while participation rises: not implementable.
  const std::string menu = write_file("menu.json", R"({
    "type_values": [1.0, 2.0],
    "items": [
      {"participation": 0.5, "reward": 0.9},
      {"participation": 1.0, "reward": 0.1}
    ]
  })");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"validate", "--menu", menu}), 1);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("implementability: violated"), std::string::npos);
}

TEST_F(CliTest, ValidateRequiresSomethingToCheck) {
  EXPECT_EQ(run_cli({"validate"}), 1);
}

TEST_F(CliTest, SweepWritesOneCsvAcrossPolicies) {
  const std::string cfg = write_file("sweep.json", R"({
    "servers": 4, "clients": 24, "tasks": 2, "type_levels": 5,
    "horizon_slots": 100, "warmup_slots": 30, "seed": 3,
    "area": {"width": 60.0, "height": 60.0}
  })");
  ASSERT_EQ(run_cli({"sweep", "--config", cfg, "--axis", "gamma", "--values",
                     "3,5", "--seeds", "1", "--policy", "famus,random",
                     "--out", dir_.string()}),
            0);
  const fs::path csv = dir_ / "sweep-type_levels.csv";
  ASSERT_TRUE(fs::exists(csv));

  std::ifstream in(csv);
  std::string line;
  std::string schema;
  int data_rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (schema.empty() && line.size() > 2) schema = line.substr(2);
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++data_rows;
  }
  EXPECT_EQ(schema, famus::kSweepSchema);
  EXPECT_EQ(data_rows, 2 * 2);  // two axis values, two policies
}

TEST_F(CliTest, SweepRejectsAnUnknownAxis) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"sweep", "--config", kSmokeConfig, "--axis", "peanuts",
                     "--values", "1", "--out", dir_.string()}),
            1);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("error:"), std::string::npos);
}

TEST_F(CliTest, OracleCheckPassesOnHealthySolvers) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"oracle-check", "--trials", "20", "--slots", "40"}), 0);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("all oracles passed"), std::string::npos);
}

TEST_F(CliTest, OracleCheckCatchesADeliberatelyWrongSolver) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"oracle-check", "--trials", "40", "--slots", "0",
                     "--faulty"}),
            1);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("[FAIL] client subset solver"), std::string::npos);
}

TEST_F(CliTest, OracleCheckWithZeroTrialsIsVacuouslyFine) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"oracle-check", "--trials", "0", "--slots", "0"}), 0);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("vacuously"), std::string::npos);
}
