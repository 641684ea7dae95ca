#include <fstream>

#include <gtest/gtest.h>

#include "ace/service.hpp"
#include "test_support.hpp"

using namespace ace;
using namespace ace::service;
using nlohmann::json;

namespace {

class FlakyBackend final : public llm::ChatBackend {
 public:
  int failures = 0;
  std::string complete(const std::vector<llm::ChatMessage>&, const llm::GenerationParams&) override {
    if (failures > 0) {
      --failures;
      throw llm::BackendError("down");
    }
    return "What do you expect line 2 to do?";
  }
  std::string describe() const override { return "flaky-secret-backend"; }
};

std::vector<std::string> dialogue_pool() {
  return corpus::read_json_file(ace::testing::fixture("bone_dialogue_pool.json")).get<std::vector<std::string>>();
}

class Service : public ::testing::Test {
 protected:
  ace::testing::TempDir dir;
  std::shared_ptr<FlakyBackend> flaky = std::make_shared<FlakyBackend>();

  ServiceConfig config() {
    ServiceConfig c;
    c.corpus = ace::testing::fixture_corpus();
    c.data_dir = dir.path();
    c.seed = 7;
    c.snapshot_every = 3;
    auto model = std::make_shared<const reward::RewardModel>();
    SlotConfig s1;
    s1.backend = std::make_shared<llm::MockBackend>(dialogue_pool(), 0, llm::MockMode::scripted);
    s1.model = model;
    SlotConfig s2;
    s2.backend = flaky;
    s2.model = model;
    s2.best_of_n.n = 1;
    c.slots = {{1, s1}, {2, s2}};
    return c;
  }

  static std::string create(TutorService& svc, int slot = 1) {
    const auto r = svc.create_session({{"problem_id", "find-the-bone"}, {"model_slot", slot}});
    EXPECT_EQ(r.status, 201);
    return r.body.at("id").get<std::string>();
  }
};

}  // namespace

TEST_F(Service, CreateAndValidate) {
  TutorService svc(config());
  const auto id = create(svc);
  EXPECT_EQ(svc.session_count(), 1u);
  EXPECT_EQ(svc.create_session({{"problem_id", "nope"}, {"model_slot", 1}}).status, 404);
  EXPECT_EQ(svc.create_session({{"problem_id", "find-the-bone"}, {"model_slot", 3}}).status, 400);
  EXPECT_EQ(svc.create_session({{"problem_id", "find-the-bone"}, {"model_slot", 5}}).status, 400);
  EXPECT_EQ(svc.create_session({{"problem_id", "find-the-bone"}}).status, 400);
  EXPECT_EQ(svc.get_session("missing").status, 404);
  EXPECT_EQ(svc.get_session(id).status, 200);
  EXPECT_EQ(svc.post_turn(id, {{"text", "   "}}).status, 400);
}

TEST_F(Service, FirstReplyAndBlinding) {
  TutorService svc(config());
  const auto id = create(svc);
  const auto r = svc.post_turn(id, {{"text", "My code fails."}, {"code", "print(1)"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("assistant_text"), dialogue_pool()[0]);
  EXPECT_EQ(r.body.at("turn_idx"), 1);
  const auto dump = svc.get_session(id).body.dump() + svc.list_problems().body.dump();
  EXPECT_EQ(dump.find("mock"), std::string::npos);
  EXPECT_EQ(dump.find("flaky"), std::string::npos);
}

TEST_F(Service, BackendFailureKeepsPendingTurn) {
  TutorService svc(config());
  const auto id = create(svc, 2);
  flaky->failures = 1;
  auto r = svc.post_turn(id, {{"text", "Help"}});
  EXPECT_EQ(r.status, 502);
  EXPECT_EQ(r.body.at("pending"), true);
  EXPECT_EQ(r.body.dump().find("flaky-secret"), std::string::npos);
  EXPECT_EQ(svc.post_turn(id, {{"text", "Again"}}).status, 409);
  r = svc.retry(id);
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("turn_idx"), 1);
  EXPECT_EQ(svc.retry(id).status, 409);
}

TEST_F(Service, ClosedSessionRejectsTurns) {
  TutorService svc(config());
  const auto id = create(svc);
  EXPECT_EQ(svc.close(id).status, 200);
  EXPECT_EQ(svc.close(id).status, 409);
  EXPECT_EQ(svc.post_turn(id, {{"text", "hi"}}).status, 409);
}

TEST_F(Service, RatingsValidationAndExport) {
  TutorService svc(config());
  const auto id = create(svc);
  for (int i = 0; i < 3; ++i) ASSERT_EQ(svc.post_turn(id, {{"text", "turn " + std::to_string(i)}}).status, 200);
  const char* labels[] = {"true_positive", "true_positive", "false_positive"};
  for (int i = 0; i < 3; ++i)
    EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r1"}, {"turn_idx", 2 * i + 1}, {"label", labels[i]}}).status, 201);
  EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r1"}, {"turn_idx", 1}, {"label", "true_positive"}}).status, 409);
  EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r2"}, {"turn_idx", 0}, {"label", "true_positive"}}).status, 422);
  EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r2"}, {"turn_idx", 1}, {"label", "maybe"}}).status, 422);
  EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r2"}, {"turn_idx", 1}, {"label", "false_negative"}}).status, 201);

  json scores{{"relevancy", 8}, {"informativeness", 7}, {"task_completion", 6}, {"overall", 7}};
  EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r1"}, {"scores", scores}}).status, 422);
  scores["fluency"] = 11;
  EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r1"}, {"scores", scores}}).status, 422);
  scores["fluency"] = 9;
  EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r1"}, {"scores", scores}}).status, 201);
  EXPECT_EQ(svc.post_rating(id, {{"rater_id", "r1"}, {"scores", scores}}).status, 409);

  const auto ex = svc.export_ratings().body;
  EXPECT_EQ(ex.at("turn_ratings").size(), 4u);
  EXPECT_EQ(ex.at("model_ratings").size(), 1u);
  const auto& s1 = ex.at("slots").at("1");
  EXPECT_EQ(s1.at("tp"), 2);
  EXPECT_EQ(s1.at("fp"), 1);
  EXPECT_EQ(s1.at("fn"), 1);
  EXPECT_NEAR(s1.at("precision").get<double>(), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s1.at("recall").get<double>(), 2.0 / 3.0, 1e-12);
}

TEST_F(Service, ReloadRestoresSessionsAndRatings) {
  std::string id;
  json before;
  {
    TutorService svc(config());
    id = create(svc);
    for (int i = 0; i < 4; ++i) ASSERT_EQ(svc.post_turn(id, {{"text", "t" + std::to_string(i)}}).status, 200);
    ASSERT_EQ(svc.post_rating(id, {{"rater_id", "r"}, {"turn_idx", 1}, {"label", "true_positive"}}).status, 201);
    before = svc.get_session(id).body;
  }
  ASSERT_TRUE(std::filesystem::exists(dir / "sessions" / (id + ".snapshot.json")));
  TutorService again(config());
  EXPECT_EQ(again.get_session(id).body, before);
  EXPECT_EQ(again.post_rating(id, {{"rater_id", "r"}, {"turn_idx", 1}, {"label", "true_positive"}}).status, 409);
  EXPECT_EQ(again.post_turn(id, {{"text", "more"}}).status, 200);
}

TEST_F(Service, TruncatedFinalLineIgnored) {
  std::string id;
  json before;
  {
    TutorService svc(config());
    id = create(svc);
    ASSERT_EQ(svc.post_turn(id, {{"text", "hello"}}).status, 200);
    before = svc.get_session(id).body;
  }
  std::ofstream(dir / "sessions" / (id + ".events.jsonl"), std::ios::app) << R"({"type": "turn", "tu)";
  TutorService again(config());
  EXPECT_EQ(again.get_session(id).body, before);
}

TEST(Invariants, DetectsBrokenSessions) {
  Session s;
  s.id = "x";
  s.problem_id = "p";
  EXPECT_TRUE(check_invariants(s).empty());
  s.turns.push_back({{corpus::Speaker::assistant, "hi", std::nullopt}, std::nullopt});
  EXPECT_FALSE(check_invariants(s).empty());
  s.turns.clear();
  s.model_slot = 9;
  EXPECT_FALSE(check_invariants(s).empty());
}

TEST(Invariants, SessionJsonRoundTrip) {
  Session s;
  s.id = "abc";
  s.problem_id = "find-the-bone";
  s.model_slot = 2;
  s.created_at = "2024-01-01T00:00:00Z";
  s.turns.push_back({{corpus::Speaker::student, "q", std::string("x = 1")}, std::nullopt});
  EXPECT_TRUE(s.pending());
  const auto back = session_from_json(to_json(s));
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_EQ(parse_label("false_negative"), Label::false_negative);
  EXPECT_FALSE(parse_label("tp"));
}

TEST(ServiceConfigFile, LoadsFixture) {
  const auto c = load_service_config(ace::testing::fixture("service.json"));
  EXPECT_EQ(c.seed, 1234u);
  EXPECT_EQ(c.slots.count(1), 1u);
  EXPECT_EQ(c.corpus.problems.size(), 2u);
}
