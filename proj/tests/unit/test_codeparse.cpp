#include <gtest/gtest.h>

#include "ace/codeparse.hpp"
#include "ace/corpus.hpp"
#include "test_support.hpp"

using namespace ace::codeparse;

namespace {

std::string bone_code() {
  return ace::testing::fixture_corpus().find_problem("find-the-bone")->buggy_code;
}

std::vector<CodeToken> visible(std::string_view src) {
  std::vector<CodeToken> out;
  for (const auto& t : tokenize(src).tokens)
    if (!t.text.empty() && t.kind != TokenKind::newline) out.push_back(t);
  return out;
}

}  // namespace

TEST(Tokenize, ReturnI) {
  const auto t = visible("return i");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].text, "return");
  EXPECT_EQ(t[0].kind, TokenKind::keyword);
  EXPECT_EQ(t[1].text, "i");
  EXPECT_EQ(t[1].kind, TokenKind::identifier);
}

TEST(Tokenize, SplittingApplesLoopHead) {
  const auto t = visible("while apples > 0 and apples > children:");
  int gt = 0;
  bool kw_while = false, kw_and = false;
  for (const auto& x : t) {
    if (x.kind == TokenKind::operator_ && x.text == ">") ++gt;
    kw_while |= x.kind == TokenKind::keyword && x.text == "while";
    kw_and |= x.kind == TokenKind::keyword && x.text == "and";
  }
  EXPECT_EQ(gt, 2);
  EXPECT_TRUE(kw_while);
  EXPECT_TRUE(kw_and);
}

TEST(Tokenize, Empty) { EXPECT_TRUE(tokenize("").tokens.empty()); }

TEST(Tokenize, MultiCharOperatorsAndStrings) {
  const auto t = visible("x **= 2 # note\ny = f'a{b}' != \"c\"");
  std::vector<std::string> texts;
  for (const auto& x : t) texts.push_back(x.text);
  EXPECT_EQ(texts, (std::vector<std::string>{"x", "**=", "2", "# note", "y", "=", "f'a{b}'", "!=", "\"c\""}));
}

TEST(Tokenize, IndentDedentBalance) {
  const auto s = tokenize(bone_code());
  int depth = 0;
  for (const auto& t : s.tokens) {
    if (t.kind == TokenKind::indent) ++depth;
    if (t.kind == TokenKind::dedent) --depth;
    EXPECT_GE(depth, 0);
  }
  EXPECT_EQ(depth, 0);
  EXPECT_FALSE(s.unbalanced_indentation);
}

TEST(Tokenize, UnbalancedDedentFlagged) {
  EXPECT_TRUE(tokenize("if x:\n        y = 1\n    z = 2\n").unbalanced_indentation);
}

TEST(Tokenize, DetokenizeRoundTrip) {
  const auto code = bone_code();
  EXPECT_EQ(detokenize(tokenize(code).tokens), code + "\n");
}

TEST(Tokenize, BracketContinuationIsOneStatement) {
  const auto s = tokenize("f(a,\n  b)\n");
  int newlines = 0;
  for (const auto& t : s.tokens) newlines += t.kind == TokenKind::newline;
  EXPECT_EQ(newlines, 1);
}

TEST(Profile, CustomKeywordFile) {
  const auto p = LanguageProfile::from_text("mini", "# comment\nfoo\n\n bar \n");
  EXPECT_TRUE(p.is_keyword("foo"));
  EXPECT_TRUE(p.is_keyword("bar"));
  EXPECT_FALSE(p.is_keyword("while"));
  EXPECT_EQ(visible("foo x").front().kind, TokenKind::identifier);
  EXPECT_EQ(tokenize("foo x", p).tokens.front().kind, TokenKind::keyword);
}

TEST(Sketch, FindTheBoneShape) {
  EXPECT_EQ(sketch(bone_code()).serialize(), "(module (def (stmt) (for (if (stmt)) (elif (stmt))) (return)))");
}

TEST(Sketch, EmptySource) { EXPECT_EQ(sketch("").serialize(), "(module)"); }

TEST(DefUse, SingleChain) {
  const auto e = defuse("x = 1\ny = x");
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0], (DefUseEdge{"x", 1, 2}));
}

TEST(DefUse, NoAssignments) { EXPECT_TRUE(defuse("print(a)\nprint(b)").empty()); }

TEST(DefUse, ForTargetsAndRedefinition) {
  const auto e = defuse("s = 0\nfor i in xs:\n    s = s + i\nprint(s)");
  const std::vector<DefUseEdge> want = {{"i", 2, 3}, {"s", 1, 3}, {"s", 3, 4}};
  EXPECT_EQ(e, want);
}

TEST(DefUse, AttributesAndCallsIgnored) {
  const auto e = defuse("obj = make()\nobj.count = 1\nn = obj.count + len(obj)");
  for (const auto& x : e) {
    EXPECT_NE(x.variable, "count");
    EXPECT_NE(x.variable, "len");
    EXPECT_NE(x.variable, "make");
  }
  EXPECT_FALSE(e.empty());
}
