#pragma once

// Lightweight lexer and structural summaries for short Python-like snippets.
// There is no grammar: structure comes from indentation blocks, bracket
// nesting, and statement heads.

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ace::codeparse {

enum class TokenKind { keyword, identifier, literal, operator_, punctuation, newline, indent, dedent };

std::string to_string(TokenKind k);

struct CodeToken {
  std::string text;
  TokenKind kind = TokenKind::punctuation;
  int line = 1;  // 1-based
  int col = 0;   // 0-based, after tab expansion
  bool operator==(const CodeToken&) const = default;
};

/// Keyword list for one language profile.
class LanguageProfile {
 public:
  LanguageProfile(std::string name, std::set<std::string> keywords);

  /// One keyword per line; blank lines and lines starting with '#' ignored.
  static LanguageProfile from_file(const std::string& name, const std::filesystem::path& path);
  static LanguageProfile from_text(const std::string& name, std::string_view text);

  /// The compiled-in python_like profile (data/keywords/python_like.txt).
  static const LanguageProfile& python_like();

  const std::string& name() const noexcept { return name_; }
  bool is_keyword(std::string_view word) const { return keywords_.count(std::string(word)) > 0; }
  const std::set<std::string>& keywords() const noexcept { return keywords_; }

 private:
  std::string name_;
  std::set<std::string> keywords_;
};

struct TokenStream {
  std::vector<CodeToken> tokens;
  /// Set when a dedent lands on a column that matches no enclosing block.
  bool unbalanced_indentation = false;
};

/// Never fails: unknown characters become punctuation tokens. Tabs expand to
/// four spaces and '\r' is dropped. A '#' comment becomes one literal token so
/// the source can be rebuilt from the stream.
TokenStream tokenize(std::string_view source,
                     const LanguageProfile& profile = LanguageProfile::python_like());

/// Places each token at its (line, col). Reproduces the tab-expanded source
/// modulo trailing whitespace.
std::string detokenize(const std::vector<CodeToken>& tokens);

/// Tokens with visible text (drops newline/indent/dedent).
std::vector<std::string> surface_tokens(const TokenStream& stream);

struct SketchNode {
  std::string label;
  std::vector<SketchNode> children;

  std::size_t size() const;
  std::size_t leaf_count() const;
  /// Bracketed form, e.g. "(def (stmt) (for (if (stmt))))".
  std::string serialize() const;
  bool operator==(const SketchNode&) const = default;
};

/// Root is labeled "module"; one child per logical statement, nested under the
/// statement that opens its indentation block. Statement labels are the head
/// keyword for if/elif/else/for/while/def/return/class/try/except/finally/with,
/// otherwise "stmt".
SketchNode sketch(std::string_view source,
                  const LanguageProfile& profile = LanguageProfile::python_like());

struct DefUseEdge {
  std::string variable;
  int def_line = 0;
  int use_line = 0;
  auto operator<=>(const DefUseEdge&) const = default;
};

/// Identifiers left of a top-level '=' and `for` targets are definitions; every
/// other identifier occurrence is a use. Each use links to the most recent
/// definition on an earlier line, or earlier in the same statement for `for`
/// headers. Attribute names after '.' and call targets are ignored. Sorted,
/// no duplicates.
std::vector<DefUseEdge> defuse(std::string_view source,
                               const LanguageProfile& profile = LanguageProfile::python_like());

}  // namespace ace::codeparse
