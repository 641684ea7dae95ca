#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "ace/llmclient.hpp"
#include "test_support.hpp"

using namespace ace;
using namespace ace::llm;

namespace {

// Fake completion server on an ephemeral port.
class FakeServer {
 public:
  explicit FakeServer(httplib::Server::Handler h) {
    server_.Post("/v1/chat/completions", std::move(h));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void reply(httplib::Response& res, const std::string& content) {
  res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                  "application/json");
}

RemoteConfig remote(const FakeServer& s) {
  RemoteConfig c;
  c.base_url = s.base_url();
  c.model = "tutor";
  c.api_key = "k-123";
  c.timeout_s = 5;
  c.initial_backoff = std::chrono::milliseconds(1);
  return c;
}

const std::vector<ChatMessage> kMsgs = {{Role::system, "sys"}, {Role::user, "hi"}};

}  // namespace

TEST(RequestBody, DefaultsAndCutoff) {
  GenerationParams p;
  auto j = request_body("m", kMsgs, p);
  EXPECT_EQ(j.at("temperature").get<double>(), 0.0);
  EXPECT_EQ(j.at("max_tokens").get<int>(), 1024);
  EXPECT_FALSE(j.contains("top_p"));
  EXPECT_EQ(j.at("messages").at(0).at("role"), "system");
  p.top_p_cutoff = 0.01;
  j = request_body("m", kMsgs, p);
  EXPECT_TRUE(j.contains("top_p"));
}

TEST(Params, Validation) {
  GenerationParams p;
  p.temperature = -0.1;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.max_tokens = 0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.top_p_cutoff = 1.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Remote, SendsBodyAndBearer) {
  std::string auth, path, body;
  FakeServer s([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    path = req.path;
    body = req.body;
    reply(res, "What does line 3 do?");
  });
  RemoteBackend b(remote(s));
  EXPECT_EQ(b.complete(kMsgs, {}), "What does line 3 do?");
  EXPECT_EQ(auth, "Bearer k-123");
  EXPECT_EQ(path, "/v1/chat/completions");
  const auto j = nlohmann::json::parse(body);
  EXPECT_EQ(j.at("model"), "tutor");
  EXPECT_EQ(j.at("messages").size(), 2u);
  EXPECT_NE(body.find("\"max_tokens\":1024"), std::string::npos);
}

TEST(Remote, UnauthorizedNamesEnvVar) {
  FakeServer s([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  RemoteBackend b(remote(s));
  try {
    b.complete(kMsgs, {});
    FAIL() << "no throw";
  } catch (const AuthError& e) {
    EXPECT_NE(std::string(e.what()).find("ACE_LLM_API_KEY"), std::string::npos);
  }
}

TEST(Remote, RetriesServerErrors) {
  std::atomic<int> calls{0};
  FakeServer s([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 500;
      return;
    }
    reply(res, "ok?");
  });
  RemoteBackend b(remote(s));
  EXPECT_EQ(b.complete(kMsgs, {}), "ok?");
  EXPECT_EQ(calls.load(), 2);
}

TEST(Remote, ClientErrorIsNotRetried) {
  std::atomic<int> calls{0};
  FakeServer s([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
  });
  RemoteBackend b(remote(s));
  EXPECT_THROW(b.complete(kMsgs, {}), BackendError);
  EXPECT_EQ(calls.load(), 1);
}

TEST(Remote, GivesUpAfterMaxAttempts) {
  std::atomic<int> calls{0};
  FakeServer s([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
  });
  RemoteBackend b(remote(s));
  EXPECT_THROW(b.complete(kMsgs, {}), BackendError);
  EXPECT_EQ(calls.load(), 3);
}

TEST(Remote, MalformedResponse) {
  FakeServer s([](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
  RemoteBackend b(remote(s));
  EXPECT_THROW(b.complete(kMsgs, {}), BackendError);
}

TEST(Mock, HashedIsDeterministic) {
  MockBackend a({"a", "b", "c"}, 3), b({"a", "b", "c"}, 3);
  for (int i = 0; i < 20; ++i) {
    const std::vector<ChatMessage> m = {{Role::user, "q" + std::to_string(i)}};
    EXPECT_EQ(a.complete(m, {}), b.complete(m, {}));
  }
}

TEST(Mock, ScriptedFollowsAssistantCount) {
  MockBackend m({"r0", "r1", "r2"}, 0, MockMode::scripted);
  std::vector<ChatMessage> msgs = {{Role::system, "s"}, {Role::user, "u"}};
  EXPECT_EQ(m.complete(msgs, {}), "r0");
  msgs.push_back({Role::assistant, "r0"});
  msgs.push_back({Role::user, "u2"});
  EXPECT_EQ(m.complete(msgs, {}), "r1");
  GenerationParams p;
  p.seed = 1;
  EXPECT_EQ(m.complete(msgs, p), "r2");
}

TEST(MakeBackend, Errors) {
  EXPECT_THROW(make_backend({{"kind", "nope"}}), Error);
  EXPECT_THROW(make_backend({{"kind", "mock"}, {"pool", "missing.json"}}), Error);
  EXPECT_THROW(make_backend({{"kind", "remote"}, {"model", "x"}}), Error);
  EXPECT_THROW(make_backend(nlohmann::json::object()), Error);
  EXPECT_THROW(make_backend({{"kind", "mock"}, {"pool", "bone_dialogue_pool.json"}, {"temp", 1}},
                            ace::testing::fixture("")),
               Error);
  const auto b = make_backend({{"kind", "mock"}, {"pool", "bone_dialogue_pool.json"}, {"mode", "scripted"}},
                              ace::testing::fixture(""));
  EXPECT_NE(b->describe().find("mock"), std::string::npos);
}

class Prompt : public ::testing::Test {
 protected:
  const corpus::Corpus& c = ace::testing::fixture_corpus();
  const corpus::Problem& apples = *c.find_problem("splitting-apples");
  const corpus::Problem& bone = *c.find_problem("find-the-bone");
};

TEST_F(Prompt, NoFewShots) {
  const auto& th = *c.find_thread("splitting-apples-1");
  const auto p = assemble_prompt(apples, {th.turns[0]});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].role, Role::system);
  EXPECT_EQ(p[1].role, Role::user);
  EXPECT_NE(p[1].content.find("split_apples(100, 100)"), std::string::npos);
  EXPECT_NE(p[1].content.find(apples.buggy_code), std::string::npos);
  EXPECT_EQ(p[2].role, Role::user);
  EXPECT_EQ(p[2].content, render_turn(th.turns[0]));
}

TEST_F(Prompt, PrefixOrderAndRoles) {
  const auto& th = *c.find_thread("find-the-bone-1");
  std::vector<corpus::Turn> prefix = th.turns;
  prefix.push_back({corpus::Speaker::student, "Is it the swap?", std::nullopt});
  const auto p = assemble_prompt(bone, prefix);
  ASSERT_EQ(p.size(), 2 + prefix.size());
  EXPECT_EQ(p[2].role, Role::user);
  EXPECT_EQ(p[3].role, Role::assistant);
  EXPECT_EQ(p[3].content, th.turns[1].text);
  EXPECT_EQ(p[4].content, "Is it the swap?");
}

TEST_F(Prompt, FixWithheldUnlessRequested) {
  const auto few = std::vector<corpus::DialogueThread>{*c.find_thread("splitting-apples-1")};
  const auto hidden = assemble_prompt(bone, {}, few);
  for (const auto& m : hidden)
    if (m.role == Role::system) EXPECT_EQ(m.content.find(bone.bug_fix), std::string::npos);
  PromptOptions o;
  o.include_fix = true;
  const auto shown = assemble_prompt(bone, {}, few, o);
  EXPECT_NE(shown[0].content.find(bone.bug_fix), std::string::npos);
}

TEST_F(Prompt, FewShotsSkipSameProblem) {
  const std::vector<corpus::DialogueThread> few = {*c.find_thread("find-the-bone-1"),
                                                   *c.find_thread("splitting-apples-1")};
  const auto p = assemble_prompt(bone, {}, few);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[1].role, Role::system);
  EXPECT_NE(p[1].content.find("Example dialogue:"), std::string::npos);
  EXPECT_NE(p[1].content.find(c.find_thread("splitting-apples-1")->turns[1].text), std::string::npos);
  PromptOptions o;
  o.max_few_shots = 0;
  EXPECT_EQ(assemble_prompt(apples, {}, few, o).size(), 2u);
}

TEST(RenderTurn, AppendsCode) {
  corpus::Turn t{corpus::Speaker::student, "Here:", std::string("x = 1")};
  EXPECT_EQ(render_turn(t), "Here:\n\n```\nx = 1\n```");
  t.code.reset();
  EXPECT_EQ(render_turn(t), "Here:");
}
