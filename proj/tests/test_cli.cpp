#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "songemb/songemb.hpp"
#include "test_util.hpp"

using namespace songemb;
using songemb::testing::read_text;
using songemb::testing::TempDir;
using songemb::testing::write_text;

namespace {

struct Run {
  int code;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SONGEMB_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(read_text(path)); }

// Small synthetic corpus shared by the tests in this file.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    const auto r = run("synth -q -o " + dir_->file("data") +
                       " --set synth.sequences=3000 --set synth.songs=400 --set synth.genres=4 --set observations.pairs=2000 --seed 3 --workers 1");
    ASSERT_EQ(r.code, 0) << r.output;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string data(const std::string& f) { return dir_->file("data/" + f); }
  static std::string common() {
    return "-q --workers 1 --seed 3 --sequences " + data("sequences.txt") + " --catalog " + data("catalog.tsv") +
           " --set data.min_count=2 --set eval.k=20 --set train.hyperparams.dim=16 --set train.hyperparams.epochs=2";
  }
  static TempDir* dir_;
};
TempDir* CliTest::dir_ = nullptr;

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("train --bogus-flag").code, 2);
}

TEST(Cli, PrepareMissingFileIsValidationError) {
  const auto r = run("prepare -q --sequences /no/such/sequences.txt");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("/no/such/sequences.txt"), std::string::npos) << r.output;
}

TEST(Cli, UnknownConfigKeyIsValidationError) {
  const auto r = run("prepare -q --set nope.key=1 --sequences x");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("unknown config key 'nope'"), std::string::npos) << r.output;
}

TEST_F(CliTest, SynthWritesFiles) {
  for (const char* f : {"sequences.txt", "catalog.tsv", "observations.tsv", "synth.json"}) EXPECT_TRUE(std::filesystem::exists(data(f))) << f;
  const auto rep = read_json(data("synth.json"));
  EXPECT_EQ(rep["command"], "synth");
  EXPECT_EQ(rep["result"]["sequences"], 3000);
}

TEST_F(CliTest, PrepareIsDeterministic) {
  TempDir out;
  ASSERT_EQ(run("prepare " + common() + " -o " + out.file("a")).code, 0);
  ASSERT_EQ(run("prepare " + common() + " -o " + out.file("b")).code, 0);
  EXPECT_EQ(read_text(out.file("a/split_manifest.tsv")), read_text(out.file("b/split_manifest.tsv")));
  EXPECT_EQ(read_text(out.file("a/vocabulary.tsv")), read_text(out.file("b/vocabulary.tsv")));
  EXPECT_FALSE(read_text(out.file("a/split_manifest.tsv")).empty());
}

TEST_F(CliTest, ConfigFilePrecedence) {
  TempDir out;
  write_text(out.file("c.json"), R"({"train": {"hyperparams": {"dim": 8, "window": 2}}})");
  const auto r = run("train " + common() + " -c " + out.file("c.json") + " --set train.hyperparams.window=3 -o " + out.path().string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rep = read_json(out.file("train.json"));
  // --set in common() beats the file for dim; the later --set beats it for window.
  EXPECT_EQ(rep["result"]["hyperparams"]["dim"], 16);
  EXPECT_EQ(rep["result"]["hyperparams"]["window"], 3);
  EXPECT_EQ(rep["config"]["seed"], 3);
}

TEST_F(CliTest, EvalOfWrittenFileMatchesInMemory) {
  TempDir out;
  ASSERT_EQ(run("train " + common() + " -o " + out.path().string()).code, 0);
  const auto r = run("eval " + common() + " -e " + out.file("embeddings.bin") + " -o " + out.path().string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto file_metrics = read_json(out.file("eval.json"))["metrics"];

  RunConfig cfg;
  cfg.set_path("seed", 3);
  cfg.set_path("workers", 1);
  cfg.set("data.min_count=2");
  cfg.set("eval.k=20");
  cfg.set("train.hyperparams.dim=16");
  cfg.set("train.hyperparams.epochs=2");
  const auto ds = split(load_sequences(data("sequences.txt")), cfg.split_ratios(), 3);
  const auto vocab = build_vocabulary(ds, 2);
  auto opt = cfg.train_options();
  opt.mask_last = true;
  const auto space = train(ds, vocab, cfg.hyperparams(), opt);
  const auto catalog = load_catalog(data("catalog.tsv"));
  const auto m = evaluate(space, make_eval_setup(ds, vocab, &catalog, cfg.eval_options()));
  EXPECT_EQ(file_metrics, to_json(m));
}

TEST_F(CliTest, OptimizeOneTrialIsDefaultOnly) {
  TempDir out;
  const auto r = run("optimize " + common() + " --objective hitrate --max-trials 1 -o " + out.path().string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto study = read_json(out.file("study.json"))["study"];
  ASSERT_EQ(study["trials"].size(), 1u);
  EXPECT_EQ(study["trials"][0]["hyperparams"]["window"], 5);
  EXPECT_EQ(study["trials"][0]["hyperparams"]["dim"], 16);
  EXPECT_EQ(study["best"], 0);
}

TEST_F(CliTest, OptimizeCheckpointResumes) {
  TempDir out;
  const std::string base = "optimize " + common() + " --set hpo.init_trials=2 --no-timing --checkpoint " + out.file("ck.json");
  ASSERT_EQ(run(base + " --max-trials 2 -o " + out.file("a")).code, 0);
  const auto r = run(base + " --max-trials 4 -o " + out.file("a"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("resuming"), std::string::npos);
  ASSERT_EQ(run("optimize " + common() + " --set hpo.init_trials=2 --no-timing --max-trials 4 -o " + out.file("b")).code, 0);
  const auto a = read_json(out.file("a/study.json"))["study"]["trials"];
  const auto b = read_json(out.file("b/study.json"))["study"]["trials"];
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a, b);
}

TEST_F(CliTest, AnalyzePopularityEmitsHeatmap) {
  TempDir out;
  ASSERT_EQ(run("train " + common() + " -o " + out.path().string()).code, 0);
  const auto r = run("analyze popularity " + common() + " --set popularity.pairs=\\\"in-set\\\" -e " + out.file("embeddings.bin") + " -o " +
                     out.path().string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rep = read_json(out.file("popularity.json"));
  EXPECT_GE(rep["result"]["filled_cells"].get<int>(), 20);
  const auto tsv = read_text(out.file("popularity_heatmap.tsv"));
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 26);
}

TEST_F(CliTest, AnalyzePlayAndMineHardneg) {
  TempDir out;
  ASSERT_EQ(run("train " + common() + " -o " + out.path().string()).code, 0);
  auto r = run("analyze play " + common() + " -e " + out.file("embeddings.bin") + " --observations " + data("observations.tsv") + " -o " +
               out.path().string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(read_json(out.file("play_correlation.json"))["result"]["r_all"].is_number());
  r = run("mine-hardneg " + common() + " -o " + out.path().string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(std::filesystem::exists(out.file("hardneg.tsv")));
}

TEST_F(CliTest, NoTimingReportsAreBitIdentical) {
  TempDir out;
  for (const char* d : {"a", "b"}) {
    const std::string o = " -o " + out.file("run");
    ASSERT_EQ(run("train " + common() + " --no-timing" + o).code, 0);
    ASSERT_EQ(run("eval " + common() + " --no-timing -e " + out.file("run/embeddings.bin") + o).code, 0);
    std::filesystem::copy(out.file("run"), out.file(d));
  }
  for (const char* f : {"train.json", "eval.json", "embeddings.bin"}) EXPECT_EQ(read_text(out.file(std::string("a/") + f)), read_text(out.file(std::string("b/") + f))) << f;
}
