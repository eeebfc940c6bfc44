#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "econ/app.hpp"
#include "econ/config.hpp"
#include "econ/errors.hpp"

namespace econ {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("econ_config_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult Cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunApp(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(ParseConfig, EmptyFileGivesDefaults) {
  const RunConfig c = ParseConfig("");
  EXPECT_EQ(c.n_heads, 8);
  EXPECT_DOUBLE_EQ(c.beta, 0.1);
  EXPECT_EQ(c.refine_rounds, 2);
  EXPECT_EQ(c.difficulty_budget, 32);
  EXPECT_EQ(c.pass_counts, (std::vector<int>{8, 16, 32, 64, 128}));
  EXPECT_DOUBLE_EQ(c.target_cot_rate, 0.148);
  EXPECT_EQ(c.prefix_len, 20u);
  EXPECT_EQ(c.reference_size, 512u);
  EXPECT_FALSE(c.run_seed);
}

TEST(ParseConfig, FileValuesAndComments) {
  const RunConfig c = ParseConfig(
      "# experiment\n"
      "run_seed = 12\n"
      "\n"
      "n_heads = 16   # more heads\n"
      "modes = cot, dynamic\n"
      "backend = remote\n");
  EXPECT_EQ(c.run_seed, 12u);
  EXPECT_EQ(c.n_heads, 16);
  EXPECT_EQ(c.modes, (std::vector<std::string>{"cot", "dynamic"}));
  EXPECT_EQ(c.backend, BackendKind::kRemote);
}

TEST(ParseConfig, FlagsOverrideFile) {
  const RunConfig c = ParseConfig("pass_counts = 32\n", {{"pass_counts", "8,16"}});
  EXPECT_EQ(c.pass_counts, (std::vector<int>{8, 16}));
}

TEST(ParseConfig, MalformedLineReportsLineNumber) {
  try {
    ParseConfig("run_seed = 1\nn_heads 8\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  try {
    ParseConfig("\n\n\nbeta = -1\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(ParseConfig, UnknownKeyListsValidKeys) {
  try {
    ParseConfig("heads = 8\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("unknown key 'heads'"), std::string::npos);
    for (const std::string& key : ConfigKeys()) EXPECT_NE(what.find(key), std::string::npos) << key;
  }
}

TEST(ParseConfig, InvalidValues) {
  EXPECT_THROW(ParseConfig("pass_counts = 16,8\n"), ConfigError);
  EXPECT_THROW(ParseConfig("modes = fast\n"), ConfigError);
  EXPECT_THROW(ParseConfig("n_heads = 0\n"), ConfigError);
  EXPECT_THROW(ParseConfig("n_heads = eight\n"), ConfigError);
  EXPECT_THROW(ParseConfig("clip_eps = 1.5\n"), ConfigError);
  EXPECT_THROW(ParseConfig("backend = grpc\n"), ConfigError);
  EXPECT_THROW(ParseConfig("refine = maybe\n"), ConfigError);
}

TEST(ParseConfig, RequireSeed) {
  EXPECT_THROW(ParseConfig("", {}, true), ConfigError);
  EXPECT_EQ(ParseConfig("", {{"run_seed", "3"}}, true).run_seed, 3u);
}

TEST(RenderConfig, RoundTrips) {
  RunConfig c = ParseConfig("run_seed = 77\nnoise_sigma = 0.125\npass_counts = 2,4,8\nrefine = true\n");
  const std::string text = RenderConfig(c);
  EXPECT_EQ(ParseConfig(text), c);
  EXPECT_EQ(RenderConfig(ParseConfig(text)), text);
  c.run_seed.reset();
  EXPECT_EQ(ParseConfig(RenderConfig(c)), c);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = TempDir("codes");
  EXPECT_EQ(Cli({"--out-dir", dir.string(), "--set", "bogus=1", "emit-fixtures"}).code, kExitConfig);
  EXPECT_EQ(Cli({"--out-dir", dir.string(), "--require-seed", "emit-fixtures"}).code, kExitConfig);
  EXPECT_EQ(Cli({"--out-dir", dir.string()}).code, kExitConfig);
  EXPECT_EQ(Cli({"--out-dir", dir.string(), "--config", (dir / "missing.cfg").string(), "emit-fixtures"}).code,
            kExitConfig);
  const auto unreachable = Cli({"--out-dir", dir.string(), "--seed", "1", "--set", "backend=remote", "--set",
                                "remote_url=http://127.0.0.1:1", "--set", "difficulty_budget=1",
                                "measure-difficulty"});
  EXPECT_EQ(unreachable.code, kExitBackend);
  EXPECT_NE(unreachable.err.find("backend error"), std::string::npos);
}

TEST(Cli, ManifestRecordsResolvedConfig) {
  const fs::path dir = TempDir("manifest");
  const auto r = Cli({"--out-dir", dir.string(), "--seed", "5", "--pass-counts", "8,16", "emit-fixtures"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string manifest = Slurp(dir / "manifest.txt");
  EXPECT_EQ(manifest.substr(0, manifest.find('\n')), "# econprove emit-fixtures");
  const RunConfig c = ParseConfig(manifest);
  EXPECT_EQ(c.run_seed, 5u);
  EXPECT_EQ(c.pass_counts, (std::vector<int>{8, 16}));
  EXPECT_TRUE(fs::exists(dir / "prove_request.golden.json"));
  EXPECT_TRUE(fs::exists(dir / "corpus.jsonl"));
}

TEST(Cli, PipelineCommandsWriteTheirFiles) {
  const fs::path dir = TempDir("pipeline");
  const std::vector<std::string> common = {"--out-dir", dir.string(), "--seed", "2", "--set",
                                           "difficulty_budget=8", "--max-inflight", "2"};
  auto run = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = common;
    args.insert(args.end(), extra.begin(), extra.end());
    return Cli(args);
  };
  ASSERT_EQ(run({"measure-difficulty"}).code, kExitOk);
  EXPECT_EQ(Slurp(dir / "difficulty.csv").substr(0, 17), "problem_id,c,bin\n");
  ASSERT_EQ(run({"partition", "--input", (dir / "difficulty.csv").string()}).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir / "bins.csv"));
  EXPECT_TRUE(fs::exists(dir / "shards.jsonl"));
  const auto prefs = run({"--set", "dataset_total=50", "build-prefs"});
  ASSERT_EQ(prefs.code, kExitOk) << prefs.err;
  EXPECT_TRUE(fs::exists(dir / "prefs.jsonl"));
  const auto pdc = run({"--pass-counts", "8,16", "analyze-pdc"});
  ASSERT_EQ(pdc.code, kExitOk) << pdc.err;
  EXPECT_NE(pdc.out.find("PDC"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "coverage.csv"));
  const auto grid = run({"--pass-counts", "2,4", "run-grid"});
  ASSERT_EQ(grid.code, kExitOk) << grid.err;
  for (const char* f : {"grid.csv", "grid.plot.csv", "attempts.jsonl", "ledger.csv", "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
}

TEST(Cli, TrainHeadsAndGridWithHeads) {
  const fs::path dir = TempDir("heads");
  const std::vector<std::string> common = {"--out-dir", dir.string(), "--seed", "4", "--set",
                                           "corpus_id=strategy-env", "--set", "iterations=3", "--set",
                                           "batch_size=8", "--set", "difficulty_budget=4"};
  auto run = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = common;
    args.insert(args.end(), extra.begin(), extra.end());
    return Cli(args);
  };
  const auto train = run({"train-heads"});
  ASSERT_EQ(train.code, kExitOk) << train.err;
  for (const char* f : {"difficulty.csv", "bins.csv", "shards.jsonl", "heads.jsonl", "telemetry.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto grid = run({"--pass-counts", "8", "--set", "modes=noncot", "run-grid", "--heads",
                         (dir / "heads.jsonl").string()});
  ASSERT_EQ(grid.code, kExitOk) << grid.err;
  EXPECT_NE(Slurp(dir / "attempts.jsonl").find("\"head_id\":7"), std::string::npos);
}

TEST(Cli, ReproduceTable2Passes) {
  const fs::path dir = TempDir("table2");
  const auto r = Cli({"--out-dir", dir.string(), "--seed", "0", "reproduce", "table2"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "table2.csv"));
}

TEST(Cli, ReproduceFailureExitsWithAcceptanceCode) {
  const fs::path dir = TempDir("table2_fail");
  // An unreachable CoT-rate target cannot be met within tolerance.
  const auto r = Cli({"--out-dir", dir.string(), "--seed", "0", "--set", "target_cot_rate=0.9", "reproduce",
                      "table2"});
  EXPECT_EQ(r.code, kExitAcceptance) << r.out << r.err;
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, RerunFromManifestIsByteIdentical) {
  const fs::path first = TempDir("rerun_a");
  const fs::path second = TempDir("rerun_b");
  const auto a = Cli({"--out-dir", first.string(), "--seed", "9", "--pass-counts", "2,4", "--set", "refine=true",
                      "--max-inflight", "1", "run-grid"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const auto b = Cli({"--out-dir", second.string(), "--config", (first / "manifest.txt").string(),
                      "--max-inflight", "8", "run-grid"});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  for (const char* f : {"grid.csv", "grid.plot.csv", "attempts.jsonl", "ledger.csv", "manifest.txt"}) {
    EXPECT_EQ(Slurp(first / f), Slurp(second / f)) << f;
  }
}

}  // namespace
}  // namespace econ
