#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ropocop/cli/commands.hpp"

namespace ropocop::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ropocop_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv(kConfigEnvVar);
  }
  void TearDown() override {
    unsetenv(kConfigEnvVar);
    fs::remove_all(dir_);
  }

  int run_cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    args.insert(args.begin(), "ropocop");
    return run(args, out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static void write(const std::string& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, GenIsByteIdentical) {
  ASSERT_EQ(run_cli({"gen", "--kind", "two-staged", "--seed", "7", "--out", path("a.rtrc")}), kExitClean);
  ASSERT_EQ(run_cli({"gen", "--kind", "two-staged", "--seed", "7", "--out", path("b.rtrc")}), kExitClean);
  EXPECT_EQ(slurp(path("a.rtrc")), slurp(path("b.rtrc")));
  EXPECT_NE(out_.str().find("pivot at event"), std::string::npos);
}

TEST_F(CliTest, GenRejectsBadInput) {
  EXPECT_EQ(run_cli({"gen", "--kind", "rop", "--out", path("x.rtrc")}), kExitInputError);
  EXPECT_EQ(run_cli({"gen", "--kind", "benign", "--min-avg", "0.5", "--out", path("x.rtrc")}), kExitInputError);
  EXPECT_EQ(run_cli({"gen", "--out", path("x.rtrc")}), kExitInputError);
}

TEST_F(CliTest, GenFromConfig) {
  write(path("gen.toml"), "[gen]\nkind = \"pure-rop\"\nseed = 3\ngadget_count = 40\n");
  ASSERT_EQ(run_cli({"gen", "--config", path("gen.toml"), "--out", path("a.rtrc")}), kExitClean) << err_.str();
  ASSERT_EQ(run_cli({"gen", "--kind", "pure-rop", "--seed", "3", "--gadget-count", "40", "--out", path("b.rtrc")}),
            kExitClean);
  EXPECT_EQ(slurp(path("a.rtrc")), slurp(path("b.rtrc")));
  EXPECT_EQ(run_cli({"gen", "--config", path("gen.toml"), "--kind", "benign", "--out", path("c.rtrc")}),
            kExitInputError);
}

TEST_F(CliTest, AnalyzeExitCodes) {
  ASSERT_EQ(run_cli({"gen", "--kind", "benign", "--seed", "1", "--out", path("ok.rtrc")}), kExitClean);
  ASSERT_EQ(run_cli({"gen", "--kind", "pure-rop", "--seed", "1", "--out", path("rop.rtrc")}), kExitClean);

  EXPECT_EQ(run_cli({"analyze", "--trace", path("ok.rtrc")}), kExitClean) << err_.str();
  EXPECT_EQ(run_cli({"analyze", "--trace", path("rop.rtrc"), "--fail-fast"}), kExitAlarm);
  const auto j = nlohmann::json::parse(out_.str());
  EXPECT_EQ(j["alarms"].size(), 1u);
  EXPECT_TRUE(j["stopped_early"].get<bool>());

  EXPECT_EQ(run_cli({"analyze", "--trace", path("missing.rtrc")}), kExitInputError);
  EXPECT_EQ(run_cli({"analyze", "--trace", path("ok.rtrc"), "--detectors", "antiCRA"}), kExitInputError);
  EXPECT_EQ(run_cli({"analyze", "--trace", path("ok.rtrc"), "--depplus-mode", "fast"}), kExitInputError);

  write(path("bad.rtrc"), "{\"schema\":\"ropocop-trace\",\"version\":1}\n{\"ev\":\"block\"\n");
  EXPECT_EQ(run_cli({"analyze", "--trace", path("bad.rtrc")}), kExitInputError);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos) << err_.str();
}

TEST_F(CliTest, AnalyzeWritesReportFile) {
  ASSERT_EQ(run_cli({"gen", "--kind", "code-injection", "--seed", "2", "--out", path("ci.rtrc")}), kExitClean);
  EXPECT_EQ(run_cli({"analyze", "--trace", path("ci.rtrc"), "--out", path("r.json")}), kExitAlarm);
  const auto j = nlohmann::json::parse(slurp(path("r.json")));
  EXPECT_EQ(j["alarms"][0]["detector"], "DepPlus");
}

TEST_F(CliTest, ConfigFromEnvironment) {
  ASSERT_EQ(run_cli({"gen", "--kind", "pure-rop", "--seed", "1", "--gadget-count", "40", "--out", path("rop.rtrc")}),
            kExitClean);
  write(path("lax.toml"), "[anticra]\nband1_max_count = 60\nband2_max_count = 80\nhard_cap = 100\n"
                          "band1_max_avg = 0.5\nband2_max_avg = 0.5\n");
  EXPECT_EQ(run_cli({"analyze", "--trace", path("rop.rtrc"), "--detectors", "anticra"}), kExitAlarm);
  setenv(kConfigEnvVar, path("lax.toml").c_str(), 1);
  EXPECT_EQ(run_cli({"analyze", "--trace", path("rop.rtrc"), "--detectors", "anticra"}), kExitClean);
  write(path("broken.toml"), "[anticra]\nwarmup = many\n");
  EXPECT_EQ(run_cli({"analyze", "--trace", path("rop.rtrc"), "--config", path("broken.toml")}), kExitInputError);
  EXPECT_NE(err_.str().find("anticra.warmup"), std::string::npos);
}

TEST_F(CliTest, LearnWritesProfile) {
  fs::create_directories(dir_ / "traces");
  for (int seed = 1; seed <= 3; ++seed) {
    ASSERT_EQ(run_cli({"gen", "--kind", "benign", "--seed", std::to_string(seed), "--block-count", "400",
                       "--max-run", "30", "--out", path("traces/t" + std::to_string(seed) + ".rtrc")}),
              kExitClean);
  }
  ASSERT_EQ(run_cli({"learn", "--dir", path("traces"), "--program", "app", "--out", path("app.toml")}), kExitClean)
      << err_.str();
  EXPECT_NE(out_.str().find("traces: 3"), std::string::npos);
  for (int seed = 1; seed <= 3; ++seed) {
    EXPECT_EQ(run_cli({"analyze", "--trace", path("traces/t" + std::to_string(seed) + ".rtrc"), "--config",
                       path("app.toml")}),
              kExitClean);
  }
}

TEST_F(CliTest, LearnOnEmptyDirectory) {
  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(run_cli({"learn", "--dir", path("empty"), "--program", "app", "--out", path("p.toml")}), kExitInputError);
  EXPECT_FALSE(fs::exists(path("p.toml")));
  EXPECT_EQ(run_cli({"learn", "--dir", path("nope"), "--program", "app"}), kExitInputError);
}

TEST_F(CliTest, EvalSummary) {
  ASSERT_EQ(run_cli({"eval", "--out", path("eval.csv")}), kExitClean) << err_.str();
  EXPECT_NE(out_.str().find("exploits detected: 10/11, benign false alarms: 0/34"), std::string::npos);
  const std::string csv = slurp(path("eval.csv"));
  EXPECT_EQ(csv.rfind("label,count,avg,expected,got,match\r\n", 0), 0u);

  write(path("w13.toml"), "[anticra]\nwarmup = 13\n");
  ASSERT_EQ(run_cli({"eval", "--config", path("w13.toml"), "--out", path("eval13.csv")}), kExitClean);
  EXPECT_NE(out_.str().find("exploits detected: 11/11"), std::string::npos) << out_.str();
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}), kExitInputError);
  EXPECT_EQ(run_cli({"frobnicate"}), kExitInputError);
  EXPECT_EQ(run_cli({"analyze"}), kExitInputError);
  EXPECT_EQ(run_cli({"--help"}), kExitClean);
}

} // namespace
} // namespace ropocop::cli
