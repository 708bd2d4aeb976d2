#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "spot/cli/cli.hpp"
#include "spot/common/array_io.hpp"
#include "spot/dataset/split.hpp"
#include "spot/eval/annot_export.hpp"

namespace fs = std::filesystem;
using namespace spot;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
  nlohmann::json record() const { return nlohmann::json::parse(out.substr(out.rfind('\n', out.size() - 2) + 1)); }
  nlohmann::json error() const { return nlohmann::json::parse(err.substr(0, err.find('\n'))); }
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const std::vector<std::string> kTinyModel = {
    "--set", "model.d_model=16",       "--set", "model.fusion_layers=1", "--set", "model.fusion_heads=2",
    "--set", "model.decoder_layers=1", "--set", "model.decoder_heads=2", "--set", "model.history=2",
    "--set", "model.horizon=4",        "--set", "train.batch_size=4",    "--set", "train.val_batches=2"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("spot_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    data_ = root_ / "data";
    const auto r = run({"gen-synth", "--out", data_.string(), "--set", "episodes_per_scene=6", "--seed", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static inline fs::path root_;
  static inline fs::path data_;
};

}  // namespace

TEST_F(CliPipeline, GenSplitTrainEvalStitchPlot) {
  auto r = run({"split", "--data", data_.string(), "--val-ratio", "0.4", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.record()["train_episodes"].get<int>() + r.record()["val_episodes"].get<int>(), 18);
  EXPECT_TRUE(fs::exists(data_ / "stats" / "summary.json"));

  const auto run_dir = root_ / "run";
  r = run(with({"train", "--data", data_.string(), "--run", run_dir.string(), "--steps", "4", "--variant", "point"},
               kTinyModel));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.record()["steps"], 4);
  EXPECT_EQ(r.record()["variant"], "point");
  for (const char* f : {"checkpoint.bin", "train_log.csv", "run_config.txt", "norm_stats.txt", "data_config.txt"}) {
    EXPECT_TRUE(fs::exists(run_dir / f)) << f;
  }

  r = run({"eval", "--run", run_dir.string(), "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = nlohmann::json::parse(read_file_bytes(run_dir / "eval_metrics/all/summary.json"));
  EXPECT_EQ(summary["scope"], "all");
  EXPECT_GT(summary["num_samples"].get<int>(), 0);
  const auto first = read_file_bytes(run_dir / "eval_metrics/all/summary.json");
  ASSERT_EQ(run({"eval", "--run", run_dir.string(), "--threads", "1"}).code, 0);
  EXPECT_EQ(read_file_bytes(run_dir / "eval_metrics/all/summary.json"), first);

  r = run({"stitch", "--run", run_dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(run_dir / "stitch" / "summary.csv"));
  EXPECT_FALSE(r.record()["episodes"].empty());

  r = run({"plot", "--csv", (run_dir / "train_log.csv").string(), "--y", "loss"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file_bytes(run_dir / "train_log.svg").rfind("<svg", 0), 0u);
}

TEST_F(CliPipeline, SplitTwiceIsIdentical) {
  const auto a = root_ / "a.json", b = root_ / "b.json";
  ASSERT_EQ(run({"split", "--data", data_.string(), "--out", a.string(), "--no-stats", "--seed", "7"}).code, 0);
  ASSERT_EQ(run({"split", "--data", data_.string(), "--out", b.string(), "--no-stats", "--seed", "7"}).code, 0);
  EXPECT_EQ(read_file_bytes(a), read_file_bytes(b));
}

TEST_F(CliPipeline, EvalBeforeTrainReportsNoCheckpoint) {
  const auto r = run({"eval", "--run", (root_ / "never_trained").string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  const auto e = r.error();
  EXPECT_EQ(e["command"], "eval");
  EXPECT_EQ(e["error"], "io");
  EXPECT_NE(e["message"].get<std::string>().find("no checkpoint"), std::string::npos);
}

TEST_F(CliPipeline, ValidateAndDataRootEnvironment) {
  ::setenv(cli::kDataRootEnv, data_.c_str(), 1);
  auto r = run({"validate", "--history", "2", "--horizon", "4"});
  ::unsetenv(cli::kDataRootEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.record()["episodes"], 18);
  EXPECT_TRUE(r.record()["failed"].empty());
}

TEST_F(CliPipeline, AnnotExportWritesIndex) {
  const auto dir = root_ / "annot";
  const auto r = run({"annot-export", "--data", data_.string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto index = eval::index_from_json(read_file_bytes(dir / eval::kIndexFile));
  ASSERT_EQ(index.size(), 18u);
  for (const auto& e : index) {
    EXPECT_TRUE(e.annotated);
    EXPECT_TRUE(fs::exists(dir / e.frame_path));
  }
}

TEST_F(CliPipeline, RawModeRoundTripsThroughPreprocess) {
  const auto raw_root = root_ / "rawdata";
  auto r = run({"gen-synth", "--out", raw_root.string(), "--mode", "raw", "--set", "episodes_per_scene=3", "--seed",
                "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"preprocess", "--out", raw_root.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.record()["episodes"], 9);
  r = run({"validate", "--data", raw_root.string(), "--history", "2", "--horizon", "4"});
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(Cli, UsageErrorsExitTwo) {
  auto r = run({"train", "--bogus"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(r.error()["error"], "usage");
  r = run({});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"split", "--data", "/nonexistent/spot/data"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(r.error()["command"], "split");
  r = run({"plot", "--csv", "/nonexistent.csv"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"gen-synth", "--mode", "video"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"train", "--run", "x", "--set", "lr=1"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("annot-export"), std::string::npos);
}

TEST(Cli, ExecutableExitCodes) {
  const std::string bin = SPOT_CLI_PATH;
  const auto tmp = fs::temp_directory_path() / ("spot_cli_exe_" + std::to_string(::getpid()));
  const auto code = [&](const std::string& args) {
    const int status = std::system((bin + " " + args + " >/dev/null 2>" + tmp.string()).c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(code("--help"), 0);
  EXPECT_EQ(code("eval --bogus"), 2);
  EXPECT_EQ(code("eval --run /nonexistent/run"), 1);
  const auto err = nlohmann::json::parse(read_file_bytes(tmp));
  EXPECT_NE(err["message"].get<std::string>().find("no checkpoint"), std::string::npos);
  fs::remove(tmp);
}
