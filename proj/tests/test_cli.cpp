#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pvar/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData = PVAR_TEST_DATA_DIR;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    static int counter = 0;
    dir_ = fs::temp_directory_path() / ("pvar_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(PVAR_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string out(const std::string& name) const { return (dir_ / name).string(); }
  std::string small() const { return (kData / "small.jsonl").string(); }

  fs::path dir_;
};

TEST_F(CliTest, ValidateReportsViolations) {
  EXPECT_EQ(run("validate --input " + small()), 1);
  const auto text = read("stdout.txt");
  EXPECT_NE(text.find("delta: fewer than 2 responses"), std::string::npos);
  EXPECT_NE(text.find("5 records, 1 violations"), std::string::npos);
}

TEST_F(CliTest, ValidateCleanFile) {
  std::ofstream(dir_ / "clean.jsonl")
      << "{\"prompt_id\":\"a\",\"responses\":[{\"response_id\":\"x\",\"reward\":1},{\"response_id\":\"y\",\"reward\":0}]}\n";
  EXPECT_EQ(run("validate --input " + out("clean.jsonl")), 0);
}

TEST_F(CliTest, EstimateWritesCsv) {
  ASSERT_EQ(run("estimate --input " + small() + " --output " + out("est.csv")), 0);
  const auto csv = read("est.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "prompt_id,pvar,n_responses,mean_pref");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);  // header + 4 eligible prompts
  EXPECT_NE(read("stderr.txt").find("delta"), std::string::npos);
}

TEST_F(CliTest, SelectIsByteDeterministic) {
  for (const char* strategy : {"pvar_top", "pvar_bottom", "random", "reward_gap_top"}) {
    const std::string args = std::string("select --input ") + small() + " --strategy " + strategy +
                             " --fraction 0.5 --seed 3 --output ";
    ASSERT_EQ(run(args + out("m1.json")), 0) << strategy;
    ASSERT_EQ(run(args + out("m2.json")), 0) << strategy;
    EXPECT_EQ(read("m1.json"), read("m2.json"));
    const auto m = pvar::io::read_manifest(dir_ / "m1.json");
    EXPECT_EQ(m.selected.size(), 2u);
  }
  ASSERT_EQ(run("select --input " + small() + " --strategy pvar_top --fraction 0.5 --output " + out("top.json")), 0);
  const auto m = pvar::io::read_manifest(dir_ / "top.json");
  EXPECT_EQ(m.selected_ids(), (std::vector<std::string>{"gamma", "alpha"}));
}

TEST_F(CliTest, PairRespectsManifest) {
  ASSERT_EQ(run("select --input " + small() + " --fraction 0.25 --output " + out("m.json")), 0);
  ASSERT_EQ(run("pair --input " + small() + " --manifest " + out("m.json") + " --output " + out("pairs.jsonl")), 0);
  const auto pairs = read("pairs.jsonl");
  EXPECT_EQ(std::count(pairs.begin(), pairs.end(), '\n'), 1);
  EXPECT_NE(pairs.find("\"chosen_id\":\"g1\""), std::string::npos);
  EXPECT_NE(pairs.find("\"rejected_id\":\"g2\""), std::string::npos);

  ASSERT_EQ(run("pair --input " + small() + " --output " + out("all.jsonl")), 0);
  const auto all = read("all.jsonl");
  EXPECT_EQ(std::count(all.begin(), all.end(), '\n'), 3);  // epsilon is degenerate, delta too short
}

TEST_F(CliTest, TrainToyWritesTrace) {
  ASSERT_EQ(run("train-toy --steps 30 --output " + out("trace.csv")), 0);
  const auto csv = read("trace.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,loss,margin,grad_norm");
}

TEST_F(CliTest, VerifyBoundsSweep) {
  ASSERT_EQ(run("verify-bounds --sweep 40 --output " + out("sweep.csv")), 0);
  const auto csv = read("sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 41);
  EXPECT_EQ(csv.find(",false"), std::string::npos);
  ASSERT_EQ(run("verify-bounds --theorem 2 --sweep 10 --output " + out("sweep2.csv")), 0);
}

TEST_F(CliTest, ReportHistogram) {
  ASSERT_EQ(run("report --input " + small() + " --output " + out("hist.csv")), 0);
  const auto csv = read("hist.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 26);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("estimate --input " + small()), 2);
  EXPECT_EQ(run("estimate --input /no/such/file.jsonl --output x"), 2);
  EXPECT_EQ(run("select --input " + small() + " --strategy best --output " + out("m.json")), 2);
  EXPECT_EQ(run("select --input " + small() + " --fraction 0 --output " + out("m.json")), 2);
  EXPECT_EQ(run("verify-bounds --theorem 3"), 2);
}

TEST_F(CliTest, DataErrors) {
  std::ofstream(dir_ / "empty.jsonl").close();
  EXPECT_EQ(run("estimate --input " + out("empty.jsonl") + " --output " + out("e.csv")), 1);
}

}  // namespace
