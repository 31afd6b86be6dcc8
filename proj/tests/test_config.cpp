#include <gtest/gtest.h>

#include "songemb/config.hpp"
#include "test_util.hpp"

using namespace songemb;
using songemb::testing::TempDir;
using songemb::testing::write_text;

TEST(Config, DefaultsMatchLibraryDefaults) {
  const RunConfig c;
  EXPECT_EQ(hyperparams_from_json(c.at("train.hyperparams")), HyperParams{});
  EXPECT_EQ(c.get<std::size_t>("eval.k"), 100u);
  EXPECT_EQ(c.study_config().max_trials, 25u);
  EXPECT_EQ(c.study_config().init_trials, 10u);
  EXPECT_EQ(c.objective().kind, ObjectiveKind::hitrate);
  EXPECT_FALSE(c.path("data.sequences").has_value());
  EXPECT_THROW(c.require_path("data.sequences"), ValidationError);
}

TEST(Config, FileThenOverridePrecedence) {
  TempDir dir;
  write_text(dir.file("c.json"), R"({
    // comments are allowed
    "seed": 7,
    "train": {"hyperparams": {"dim": 32, "window": 3}},
    "hpo": {"max_trials": 4}
  })");
  RunConfig c;
  c.merge_file(dir.file("c.json"));
  c.set("train.hyperparams.dim=48");
  EXPECT_EQ(c.seed(), 7u);
  EXPECT_EQ(c.hyperparams().dim, 48);
  EXPECT_EQ(c.hyperparams().window, 3);
  EXPECT_EQ(c.hyperparams().negatives, 5);  // untouched default
  EXPECT_EQ(c.hyperparams().seed, 7u);
  EXPECT_EQ(c.study_config().max_trials, 4u);
}

TEST(Config, UnknownKeysAndTypeErrors) {
  RunConfig c;
  EXPECT_THROW(c.set("train.hyperparams.dimension=3"), ValidationError);
  EXPECT_THROW(c.set("eval.k=\"many\""), ValidationError);
  EXPECT_THROW(c.set("no_equals_sign"), ValidationError);
  EXPECT_THROW(c.merge(nlohmann::json{{"bogus", 1}}), ValidationError);
  TempDir dir;
  write_text(dir.file("bad.json"), "{ not json");
  EXPECT_THROW(c.merge_file(dir.file("bad.json")), ValidationError);
  EXPECT_THROW(c.merge_file(dir.file("missing.json")), ValidationError);
}

TEST(Config, SetParsesJsonAndBareStrings) {
  RunConfig c;
  c.set("hpo.objective=combined-genre");
  c.set("hpo.alpha=0.25");
  c.set("ladder.rates=[0.2,1.0]");
  c.set("eval.in_set=false");
  c.set("data.sequences=/tmp/x.txt");
  EXPECT_EQ(c.objective().kind, ObjectiveKind::combined_genre);
  EXPECT_EQ(c.objective().alpha, 0.25);
  EXPECT_EQ(c.get<std::vector<double>>("ladder.rates"), (std::vector<double>{0.2, 1.0}));
  EXPECT_FALSE(c.eval_options().in_set);
  EXPECT_EQ(*c.path("data.sequences"), "/tmp/x.txt");
  c.set("data.sequences=null");
  EXPECT_FALSE(c.path("data.sequences").has_value());
}

TEST(Config, ValidationOfTypedViews) {
  RunConfig c;
  c.set("hpo.alpha=2");
  EXPECT_THROW(c.objective(), ValidationError);
  RunConfig d;
  d.set("eval.pair_mode=\"every\"");
  EXPECT_THROW(d.eval_options(), ValidationError);
  RunConfig e;
  e.set("data.split=[0.5,0.5]");
  EXPECT_THROW(e.split_ratios(), ValidationError);
  RunConfig f;
  f.set("synth.within_block=1.5");
  EXPECT_THROW(f.synth_config(), ValidationError);
}
