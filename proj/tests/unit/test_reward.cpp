#include <cmath>

#include <gtest/gtest.h>

#include "ace/reward.hpp"
#include "test_support.hpp"

using namespace ace;
using namespace ace::reward;
using ace::testing::TempDir;

namespace {

DialogueContext bone_context() {
  const auto& c = ace::testing::fixture_corpus();
  const auto& th = *c.find_thread("find-the-bone-1");
  return {*c.find_problem("find-the-bone"), {th.turns[0]}};
}

}  // namespace

TEST(Featurize, QuestionSlot) {
  const auto phi = featurize(bone_context(), "Can you explain your code line by line?");
  EXPECT_EQ(phi.get(slot_index(Slot::ends_with_question)), 1.0);
  EXPECT_EQ(phi.get(slot_index(Slot::has_question_mark)), 1.0);
  EXPECT_EQ(phi.get(slot_index(Slot::question_word_lead)), 1.0);
  // 9 metric tokens counting the "?".
  EXPECT_EQ(phi.get(slot_index(Slot::length_medium)), 1.0);
  EXPECT_EQ(phi.get(slot_index(Slot::length_short)), 0.0);
  EXPECT_EQ(phi.get(slot_index(Slot::bias)), 1.0);
}

TEST(Featurize, BugFixOverlapIsOneForBugFix) {
  const auto ctx = bone_context();
  EXPECT_DOUBLE_EQ(featurize(ctx, ctx.problem.bug_fix).get(slot_index(Slot::bug_fix_overlap)), 1.0);
}

TEST(Featurize, RepetitionIsOneForRepeatedTurn) {
  const auto& c = ace::testing::fixture_corpus();
  const auto& th = *c.find_thread("find-the-bone-1");
  DialogueContext ctx{*c.find_problem("find-the-bone"), th.turns};
  ctx.prefix.push_back({corpus::Speaker::student, "I am not sure.", std::nullopt});
  EXPECT_DOUBLE_EQ(featurize(ctx, th.turns[1].text).get(slot_index(Slot::repetition)), 1.0);
  EXPECT_EQ(featurize(bone_context(), th.turns[1].text).get(slot_index(Slot::repetition)), 0.0);
}

TEST(Featurize, SortedUniqueAndNormalizedBlocks) {
  const auto phi = featurize(bone_context(), "What happens when the bone reaches a hole during a swap?");
  double hashed = 0.0;
  for (std::size_t i = 1; i < phi.entries().size(); ++i) EXPECT_LT(phi.entries()[i - 1].first, phi.entries()[i].first);
  for (const auto& [i, v] : phi.entries())
    if (i < kHashedSlots) hashed += v * v;
  // Two unit-norm blocks share the hashed range; collisions can only shift it slightly.
  EXPECT_NEAR(hashed, 2.0, 0.2);
}

TEST(Score, ZeroThetaScoresZero) {
  RewardModel m;
  EXPECT_EQ(m.score(bone_context(), "anything at all"), 0.0);
}

TEST(Loss, HandValues) {
  EXPECT_NEAR(ranking_loss(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(sigmoid(std::log(3.0)), 0.75, 1e-15);
  EXPECT_NEAR(ranking_loss(std::log(3.0)), -std::log(0.75), 1e-15);
  EXPECT_NEAR(ranking_loss(std::log(3.0)), 0.2877, 1e-4);
  EXPECT_LT(ranking_loss(50.0), 1e-20);
  EXPECT_TRUE(std::isfinite(ranking_loss(-1e6)));
  EXPECT_NEAR(ranking_loss(-1e6), 1e6, 1e-6);
}

TEST(Loss, PairwiseLossAtZeroModel) {
  RewardModel m;
  const auto lg = pairwise_loss(m, bone_context(), "Where is the hole check?", "Add the check.");
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-12);
  EXPECT_EQ(lg.delta, 0.0);
  EXPECT_EQ(lg.grad.size(), kDimension);
}

TEST(Config, Validation) {
  auto c = TrainConfig::toy();
  c.epochs = 0;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig::toy();
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig::toy();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NO_THROW(TrainConfig::paper().validate());
  EXPECT_EQ(TrainConfig::paper().learning_rate, 5e-6);
  EXPECT_EQ(TrainConfig::paper().batch_size, 64);
  EXPECT_EQ(TrainConfig::paper().epochs, 10);
}

TEST(Config, FromJsonKeepsBaseAndRejectsUnknown) {
  const auto c = train_config_from_json({{"epochs", 3}});
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.batch_size, TrainConfig::toy().batch_size);
  EXPECT_THROW(train_config_from_json({{"epoch", 3}}), Error);
  EXPECT_EQ(train_config_from_json({{"preset", "paper"}}).learning_rate, 5e-6);
}

TEST(Train, SeparableSetHeldOutAccuracy) {
  const auto& c = ace::testing::fixture_corpus();
  const auto pairs = ace::testing::synthetic_pairs(500, 11);
  std::vector<corpus::PreferencePair> train_set(pairs.begin(), pairs.begin() + 400);
  std::vector<corpus::PreferencePair> held(pairs.begin() + 400, pairs.end());
  const auto m = train(c, train_set, TrainConfig::toy());
  EXPECT_GE(pairwise_accuracy(m, make_examples(c, held)), 0.95);
  ASSERT_EQ(m.training_log.size(), 10u);
  EXPECT_LT(m.training_log.back().mean_loss, m.training_log.front().mean_loss);
}

TEST(Train, DeterministicTheta) {
  const auto& c = ace::testing::fixture_corpus();
  const auto pairs = ace::testing::synthetic_pairs(120, 4);
  auto cfg = TrainConfig::toy();
  cfg.epochs = 3;
  cfg.seed = 9;
  const auto a = train(c, pairs, cfg);
  const auto b = train(c, pairs, cfg);
  EXPECT_EQ(a.theta, b.theta);
  cfg.seed = 10;
  EXPECT_NE(train(c, pairs, cfg).theta, a.theta);
}

TEST(Train, DivergenceReported) {
  const auto& c = ace::testing::fixture_corpus();
  const auto pairs = ace::testing::synthetic_pairs(64, 4);
  auto cfg = TrainConfig::toy();
  cfg.learning_rate = 1e308;
  EXPECT_THROW(train(c, pairs, cfg), TrainingDiverged);
}

TEST(Train, UnknownProblemInPair) {
  auto pairs = ace::testing::synthetic_pairs(2, 4);
  pairs[0].context.problem_id = "missing";
  EXPECT_THROW(make_examples(ace::testing::fixture_corpus(), pairs), Error);
}

TEST(Model, SaveLoadRoundTrip) {
  TempDir d;
  RewardModel m;
  m.theta[3] = 0.25;
  m.theta[slot_index(Slot::ends_with_question)] = -1.5;
  m.training_log.push_back({1, 0.5, 0.75});
  m.save(d / "m.json");
  const auto back = RewardModel::load(d / "m.json");
  EXPECT_EQ(back.theta, m.theta);
  EXPECT_EQ(back.feature_config, m.feature_config);
}

TEST(Model, RejectsBadTheta) {
  auto j = RewardModel{}.to_json();
  j["theta"] = nlohmann::json::array({1.0, 2.0});
  EXPECT_THROW(RewardModel::from_json(j), Error);
}

TEST(ModelStore, NamedModels) {
  TempDir d;
  ModelStore store(d.path());
  RewardModel m;
  m.theta[0] = 1.0;
  store.put(kPpoModel, m);
  store.put(kBestOfNModel, RewardModel{});
  EXPECT_EQ(store.names(), (std::vector<std::string>{"best_of_n", "ppo"}));
  EXPECT_EQ(store.get(kPpoModel).theta[0], 1.0);
  EXPECT_THROW(store.get("other"), Error);
}
