#include <gtest/gtest.h>

#include "ptcad/error.hpp"
#include "ptcad/run_config.hpp"

namespace ptcad {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::kInvalidValue;
}

TEST(RunConfig, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.integer("token_limit"), 512);
  EXPECT_DOUBLE_EQ(c.real("threshold"), 0.9);
  EXPECT_TRUE(c.flag("with_case_ending"));
  EXPECT_EQ(c.strategy(), inference::Strategy::sliding(5));
  EXPECT_EQ(c.bucket_edges(), (std::vector<double>{0, 30, 100}));
  EXPECT_EQ(c.schedule(model::Phase::kPrefinetune).epochs, 20);
  EXPECT_EQ(c.schedule(model::Phase::kFinetune).epochs, 10);
  EXPECT_EQ(c.schedule(model::Phase::kFinetune).batch_size, 64);
}

TEST(RunConfig, ParseWithComments) {
  const auto c = RunConfig::parse("# run\nhidden_dim = 64\n\nstrategy=zero\nwith_case_ending=false\n");
  EXPECT_EQ(c.integer("hidden_dim"), 64);
  EXPECT_EQ(c.strategy(), inference::Strategy::zero());
  EXPECT_FALSE(c.metric_options().with_case_ending);
  EXPECT_EQ(c.model_config(100).hidden_dim, 64);
  EXPECT_EQ(c.model_config(100).vocab_size, 100);
}

TEST(RunConfig, UnknownKeysAreRejected) {
  EXPECT_EQ(code_of([] { RunConfig::parse("hiden_dim=64\n"); }), ErrorCode::kUnknownKey);
  RunConfig c;
  EXPECT_EQ(code_of([&] { c.set("nope", "1"); }), ErrorCode::kUnknownKey);
}

TEST(RunConfig, ValuesAreTypeChecked) {
  try {
    RunConfig::parse("seed=1\nhidden_dim=abc\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidValue);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  RunConfig c;
  EXPECT_EQ(code_of([&] { c.set("threshold", "high"); }), ErrorCode::kInvalidValue);
  EXPECT_EQ(code_of([&] { c.set("curriculum", "maybe"); }), ErrorCode::kInvalidValue);
  EXPECT_EQ(code_of([] { RunConfig::parse("just a line\n"); }), ErrorCode::kInvalidValue);
}

TEST(RunConfig, OverridesApplyInOrder) {
  auto c = RunConfig::parse("seed=1\n");
  c.apply_overrides({"seed=2", "seed=3", "phase=prefinetune"});
  EXPECT_EQ(c.integer("seed"), 3);
  EXPECT_EQ(c.get("phase"), "prefinetune");
  EXPECT_EQ(code_of([&] { c.apply_overrides({"seed"}); }), ErrorCode::kInvalidValue);
}

TEST(RunConfig, ResolvedListsEveryKey) {
  const RunConfig c;
  const auto text = c.resolved();
  for (const auto& k : config_keys())
    EXPECT_NE(text.find(std::string(k.name) + "="), std::string::npos) << k.name;
  // Resolved text parses back to the same configuration.
  EXPECT_EQ(RunConfig::parse(text).resolved(), text);
}

TEST(NumberList, Parse) {
  EXPECT_EQ(parse_number_list("0, 10,20.5"), (std::vector<double>{0, 10, 20.5}));
  EXPECT_THROW(parse_number_list("0,x"), Error);
}

}  // namespace
}  // namespace ptcad
