#include <fstream>

#include <gtest/gtest.h>

#include "ace/corpus.hpp"
#include "test_support.hpp"

using namespace ace;
using namespace ace::corpus;
using ace::testing::fixture;
using ace::testing::TempDir;

namespace {

void write(const std::filesystem::path& p, const std::string& body) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << body;
}

Corpus three_turn_competition() {
  Corpus c = load_corpus(fixture("bone_only"));
  auto& th = c.threads.front();
  th.turns.push_back({Speaker::student, "I think the bone should stay in the hole.", std::nullopt});
  th.turns.push_back({Speaker::assistant, "Where in the loop would you check for that?", std::nullopt});
  th.turns.push_back({Speaker::student, "Before the swap.", std::nullopt});
  th.turns.push_back({Speaker::assistant, "What should the function return at that point?", std::nullopt});
  th.references[3] = {{"Where in the loop would you check for that?"}, {}};
  th.references[5] = {{"What should the function return at that point?"}, {"And then?"}};
  return c;
}

}  // namespace

TEST(Corpus, LoadsFindTheBone) {
  const auto c = load_corpus(fixture("bone_only"));
  ASSERT_EQ(c.problems.size(), 1u);
  ASSERT_EQ(c.threads.size(), 1u);
  const auto& th = c.threads.front();
  ASSERT_TRUE(th.references.count(1));
  const auto& rs = th.references.at(1);
  ASSERT_EQ(rs.main.size(), 1u);
  EXPECT_EQ(rs.alternates.size(), 2u);
  EXPECT_EQ(rs.main[0].rfind("Sure! It looks like your code", 0), 0u);
  EXPECT_EQ(c.find_problem("find-the-bone")->difficulty, Difficulty::competition);
}

TEST(Corpus, FixtureCorpusValidates) {
  const auto c = load_corpus(fixture("corpus"));
  EXPECT_EQ(c.problems.size(), 2u);
  EXPECT_EQ(c.threads.size(), 2u);
  EXPECT_TRUE(validate(c).empty());
}

TEST(Corpus, EmptyDirectoryIsEmptyCorpus) {
  TempDir d;
  const auto c = load_corpus(d.path());
  EXPECT_TRUE(c.problems.empty());
  EXPECT_TRUE(c.threads.empty());
}

TEST(Corpus, MissingReferenceSetNamesThread) {
  TempDir d;
  std::filesystem::copy(fixture("bone_only"), d.path(), std::filesystem::copy_options::recursive);
  auto j = read_json_file(d / "threads/find-the-bone-1.json");
  j["references"] = nlohmann::json::object();
  write(d / "threads/find-the-bone-1.json", j.dump());
  try {
    load_corpus(d.path());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_FALSE(e.issues().empty());
    bool named = false;
    for (const auto& i : e.issues())
      named |= i.id == "find-the-bone-1" && i.message.find("no ReferenceSet") != std::string::npos;
    EXPECT_TRUE(named);
  }
}

TEST(Corpus, ParseErrorCarriesLine) {
  TempDir d;
  write(d / "problems/bad.json", "{\n  \"id\": \"x\",\n  oops\n}");
  try {
    load_corpus(d.path());
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.issues().size(), 1u);
    EXPECT_EQ(e.issues()[0].kind, Issue::Kind::parse);
    EXPECT_EQ(e.issues()[0].line, 3);
  }
}

TEST(Corpus, UnknownFieldRejected) {
  TempDir d;
  std::filesystem::copy(fixture("bone_only"), d.path(), std::filesystem::copy_options::recursive);
  auto j = read_json_file(d / "problems/find-the-bone.json");
  j["extra"] = 1;
  write(d / "problems/find-the-bone.json", j.dump());
  EXPECT_THROW(load_corpus(d.path()), ValidationError);
}

TEST(Corpus, DanglingProblemAndAlternation) {
  Corpus c = load_corpus(fixture("bone_only"));
  c.threads[0].problem_id = "nope";
  std::swap(c.threads[0].turns[0].speaker, c.threads[0].turns[1].speaker);
  const auto issues = validate(c);
  bool dangling = false, alternation = false;
  for (const auto& i : issues) {
    dangling |= i.message.find("dangling") != std::string::npos;
    alternation |= i.message.find("alternate") != std::string::npos;
  }
  EXPECT_TRUE(dangling);
  EXPECT_TRUE(alternation);
}

TEST(Corpus, DuplicateReferenceRejected) {
  Corpus c = load_corpus(fixture("bone_only"));
  auto& rs = c.threads[0].references[1];
  rs.alternates.push_back("  " + rs.main[0] + " ");
  EXPECT_FALSE(validate(c).empty());
}

TEST(Corpus, SaveLoadRoundTrip) {
  TempDir d;
  const auto c = load_corpus(fixture("corpus"));
  save_corpus(c, d.path());
  const auto back = load_corpus(d.path());
  EXPECT_EQ(back.problems, c.problems);
  EXPECT_EQ(back.threads, c.threads);
}

TEST(Corpus, CanonicalDumpSortsKeys) {
  EXPECT_EQ(canonical_dump(nlohmann::json{{"b", 1}, {"a", 2}}), "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
}

TEST(Preferences, ExactCountPerTurn) {
  const auto c = three_turn_competition();
  ASSERT_TRUE(validate(c).empty());
  RuleBasedGenerator gen;
  const auto pairs = build_preferences(c, gen, 30, 1);
  EXPECT_EQ(pairs.size(), 90u);
  for (const auto& p : pairs) {
    EXPECT_TRUE(validate(p).empty()) << p.id;
    EXPECT_NE(p.chosen, p.rejected);
  }
}

TEST(Preferences, RepeatedCriterionCopiesPriorTurn) {
  const auto c = three_turn_competition();
  RuleBasedGenerator gen;
  const auto pairs = build_preferences(c, gen, 8, 1);
  const auto& th = c.threads[0];
  int repeated = 0;
  for (const auto& p : pairs) {
    if (p.criterion != Criterion::repeated) continue;
    ++repeated;
    bool found = false;
    for (const auto& t : p.context.dialogue_prefix)
      found |= t.speaker == Speaker::assistant && t.text == p.rejected;
    EXPECT_TRUE(found) << p.rejected;
  }
  EXPECT_GT(repeated, 0);
  (void)th;
}

TEST(Preferences, DirectCriterionIsBugFix) {
  const auto c = load_corpus(fixture("corpus"));
  RuleBasedGenerator gen;
  for (const auto& p : build_preferences(c, gen, 6, 1))
    if (p.criterion == Criterion::direct) EXPECT_EQ(p.rejected, c.find_problem(p.context.problem_id)->bug_fix);
}

TEST(Preferences, IrrelevantComesFromOtherProblem) {
  const auto c = load_corpus(fixture("corpus"));
  RuleBasedGenerator gen;
  int seen = 0;
  for (const auto& p : build_preferences(c, gen, 6, 1)) {
    if (p.criterion != Criterion::irrelevant) continue;
    ++seen;
    for (const auto& th : c.threads)
      if (th.problem_id == p.context.problem_id)
        for (const auto& [idx, rs] : th.references)
          for (const auto& r : rs.all()) EXPECT_NE(r, p.rejected);
  }
  EXPECT_GT(seen, 0);
}

TEST(Preferences, DeterministicAndPersisted) {
  const auto c = load_corpus(fixture("corpus"));
  RuleBasedGenerator gen;
  const auto a = build_preferences(c, gen, 5, 7);
  const auto b = build_preferences(c, gen, 5, 7);
  EXPECT_EQ(a, b);
  TempDir d;
  save_preferences(a, d / "preferences");
  auto back = load_preferences(d / "preferences");
  auto sorted = a;
  auto by_id = [](const PreferencePair& x, const PreferencePair& y) { return x.id < y.id; };
  std::sort(sorted.begin(), sorted.end(), by_id);
  std::sort(back.begin(), back.end(), by_id);
  EXPECT_EQ(back, sorted);
}

TEST(Preferences, ZeroPerTurnRejected) {
  const auto c = load_corpus(fixture("corpus"));
  RuleBasedGenerator gen;
  EXPECT_THROW(build_preferences(c, gen, 0, 1), Error);
}

TEST(Preferences, GeneratorFailureNamesTurn) {
  struct Never final : InvalidResponseGenerator {
    std::optional<std::string> generate(const InvalidRequest&) override { return std::nullopt; }
  } gen;
  const auto c = load_corpus(fixture("bone_only"));
  try {
    build_preferences(c, gen, 2, 1);
    FAIL();
  } catch (const GeneratorError& e) {
    EXPECT_EQ(e.thread_id(), "find-the-bone-1");
    EXPECT_EQ(e.turn_index(), 1u);
  }
}

TEST(Preferences, MissingDirectoryIsError) {
  EXPECT_THROW(load_preferences("/nonexistent/preferences"), ValidationError);
}
