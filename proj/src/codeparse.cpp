#include "ace/codeparse.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace ace::codeparse {

namespace {

constexpr std::string_view kPythonLikeKeywords =
#include "keywords.inc"
    ;

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Longest first.
constexpr std::array<std::string_view, 24> kMultiOps = {
    "**=", "//=", ">>=", "<<=", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
    "%=",  "&=",  "|=",  "^=",  "@=", "->", "**", "//", "<<", ">>", ":=", "<>"};
constexpr std::string_view kSingleOps = "+-*/%<>=&|^~@!";

std::vector<std::string> split_lines(std::string_view source) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : source) {
    if (c == '\r') continue;
    if (c == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\t') {
      cur.append(4, ' ');
    } else {
      cur.push_back(c);
    }
  }
  lines.push_back(std::move(cur));
  return lines;
}

}  // namespace

std::string to_string(TokenKind k) {
  switch (k) {
    case TokenKind::keyword: return "keyword";
    case TokenKind::identifier: return "identifier";
    case TokenKind::literal: return "literal";
    case TokenKind::operator_: return "operator";
    case TokenKind::punctuation: return "punctuation";
    case TokenKind::newline: return "newline";
    case TokenKind::indent: return "indent";
    case TokenKind::dedent: return "dedent";
  }
  return "punctuation";
}

LanguageProfile::LanguageProfile(std::string name, std::set<std::string> keywords)
    : name_(std::move(name)), keywords_(std::move(keywords)) {}

LanguageProfile LanguageProfile::from_text(const std::string& name, std::string_view text) {
  std::set<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    words.insert(line.substr(b, e - b + 1));
  }
  return LanguageProfile(name, std::move(words));
}

LanguageProfile LanguageProfile::from_file(const std::string& name, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read keyword list " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(name, buf.str());
}

const LanguageProfile& LanguageProfile::python_like() {
  static const LanguageProfile profile = from_text("python_like", kPythonLikeKeywords);
  return profile;
}

TokenStream tokenize(std::string_view source, const LanguageProfile& profile) {
  TokenStream out;
  auto& toks = out.tokens;
  const auto lines = split_lines(source);
  std::vector<int> indents{0};
  int depth = 0;
  bool in_statement = false;
  int last_content_line = 0;

  auto emit = [&](std::string text, TokenKind kind, int line, int col) {
    toks.push_back({std::move(text), kind, line, col});
  };

  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& s = lines[li];
    const int line = static_cast<int>(li) + 1;
    std::size_t i = 0;

    if (!in_statement) {
      auto first = s.find_first_not_of(' ');
      if (first == std::string::npos) continue;
      if (s[first] != '#') {
        const int width = static_cast<int>(first);
        if (width > indents.back()) {
          indents.push_back(width);
          emit("", TokenKind::indent, line, 0);
        } else {
          while (width < indents.back()) {
            indents.pop_back();
            emit("", TokenKind::dedent, line, 0);
          }
          if (width != indents.back()) {
            out.unbalanced_indentation = true;
            indents.push_back(width);
          }
        }
      }
      i = first;
    }

    while (i < s.size()) {
      const char c = s[i];
      const int col = static_cast<int>(i);
      if (c == ' ') {
        ++i;
        continue;
      }
      if (c == '#') {
        emit(s.substr(i), TokenKind::literal, line, col);
        last_content_line = line;
        break;
      }
      last_content_line = line;
      in_statement = true;
      if (ident_start(c)) {
        std::size_t j = i + 1;
        while (j < s.size() && ident_char(s[j])) ++j;
        std::string word = s.substr(i, j - i);
        // String prefixes such as f"..." or rb'...' stay attached to the string.
        if (j < s.size() && (s[j] == '"' || s[j] == '\'') && word.size() <= 2 &&
            std::all_of(word.begin(), word.end(), [](char ch) { return std::strchr("rRbBuUfF", ch); })) {
          // fall through to string scanning from the quote, keeping the prefix
        } else {
          const auto kind = profile.is_keyword(word) ? TokenKind::keyword : TokenKind::identifier;
          emit(std::move(word), kind, line, col);
          i = j;
          continue;
        }
        const char q = s[j];
        std::size_t k = j + 1;
        while (k < s.size() && s[k] != q) k += s[k] == '\\' ? 2 : 1;
        k = std::min(k + 1, s.size());
        emit(s.substr(i, k - i), TokenKind::literal, line, col);
        i = k;
        continue;
      }
      if (digit(c) || (c == '.' && i + 1 < s.size() && digit(s[i + 1]))) {
        std::size_t j = i + 1;
        while (j < s.size() && (ident_char(s[j]) || s[j] == '.')) ++j;
        emit(s.substr(i, j - i), TokenKind::literal, line, col);
        i = j;
        continue;
      }
      if (c == '"' || c == '\'') {
        std::size_t j = i + 1;
        if (s.compare(i, 3, std::string(3, c)) == 0) {
          auto end = s.find(std::string(3, c), i + 3);
          j = end == std::string::npos ? s.size() : end + 3;
        } else {
          while (j < s.size() && s[j] != c) j += s[j] == '\\' ? 2 : 1;
          j = std::min(j + 1, s.size());
        }
        emit(s.substr(i, j - i), TokenKind::literal, line, col);
        i = j;
        continue;
      }
      if (static_cast<unsigned char>(c) >= 0x80) {
        std::size_t j = i + 1;
        while (j < s.size() && static_cast<unsigned char>(s[j]) >= 0x80) ++j;
        emit(s.substr(i, j - i), TokenKind::punctuation, line, col);
        i = j;
        continue;
      }
      bool matched = false;
      for (auto op : kMultiOps) {
        if (s.compare(i, op.size(), op) == 0) {
          emit(std::string(op), TokenKind::operator_, line, col);
          i += op.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (kSingleOps.find(c) != std::string_view::npos) {
        emit(std::string(1, c), TokenKind::operator_, line, col);
      } else {
        if (c == '(' || c == '[' || c == '{') ++depth;
        if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
        emit(std::string(1, c), TokenKind::punctuation, line, col);
      }
      ++i;
    }

    if (in_statement && depth == 0) {
      const auto end = s.find_last_not_of(' ');
      emit("\n", TokenKind::newline, line, end == std::string::npos ? 0 : static_cast<int>(end) + 1);
      in_statement = false;
    }
  }

  if (in_statement) {
    emit("\n", TokenKind::newline, last_content_line, 0);
  }
  while (indents.size() > 1) {
    indents.pop_back();
    emit("", TokenKind::dedent, last_content_line + 1, 0);
  }
  return out;
}

std::string detokenize(const std::vector<CodeToken>& tokens) {
  std::vector<std::string> lines;
  for (const auto& t : tokens) {
    if (t.text.empty() || t.kind == TokenKind::newline) continue;
    if (static_cast<int>(lines.size()) < t.line) lines.resize(t.line);
    auto& l = lines[t.line - 1];
    if (static_cast<int>(l.size()) < t.col) l.resize(t.col, ' ');
    l += t.text;
  }
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::vector<std::string> surface_tokens(const TokenStream& stream) {
  std::vector<std::string> out;
  for (const auto& t : stream.tokens) {
    if (t.kind == TokenKind::newline || t.kind == TokenKind::indent || t.kind == TokenKind::dedent) continue;
    // Comments carry no code signal.
    if (t.kind == TokenKind::literal && !t.text.empty() && t.text[0] == '#') continue;
    out.push_back(t.text);
  }
  return out;
}

std::size_t SketchNode::size() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.size();
  return n;
}

std::size_t SketchNode::leaf_count() const {
  if (children.empty()) return 1;
  std::size_t n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

std::string SketchNode::serialize() const {
  std::string s = "(" + label;
  for (const auto& c : children) s += " " + c.serialize();
  return s + ")";
}

namespace {

const std::set<std::string>& head_labels() {
  static const std::set<std::string> heads = {"if",  "elif",   "else",    "for",  "while", "def",
                                              "return", "class", "try", "except", "finally", "with"};
  return heads;
}

bool is_comment(const CodeToken& t) {
  return t.kind == TokenKind::literal && !t.text.empty() && t.text[0] == '#';
}

}  // namespace

SketchNode sketch(std::string_view source, const LanguageProfile& profile) {
  const auto stream = tokenize(source, profile);
  SketchNode root{"module", {}};
  std::vector<std::vector<SketchNode>*> stack{&root.children};
  bool at_line_start = true;

  for (const auto& t : stream.tokens) {
    switch (t.kind) {
      case TokenKind::newline:
        at_line_start = true;
        break;
      case TokenKind::indent:
        if (!stack.back()->empty()) stack.push_back(&stack.back()->back().children);
        break;
      case TokenKind::dedent:
        if (stack.size() > 1) stack.pop_back();
        break;
      default:
        if (is_comment(t) || !at_line_start) break;
        at_line_start = false;
        std::string label = "stmt";
        if (t.kind == TokenKind::keyword && head_labels().count(t.text)) label = t.text;
        stack.back()->push_back({std::move(label), {}});
        break;
    }
  }
  return root;
}

std::vector<DefUseEdge> defuse(std::string_view source, const LanguageProfile& profile) {
  const auto stream = tokenize(source, profile);
  std::vector<std::vector<const CodeToken*>> statements(1);
  for (const auto& t : stream.tokens) {
    if (t.kind == TokenKind::newline) {
      if (!statements.back().empty()) statements.emplace_back();
      continue;
    }
    if (t.kind == TokenKind::indent || t.kind == TokenKind::dedent || is_comment(t)) continue;
    statements.back().push_back(&t);
  }

  std::map<std::string, int> last_def;
  std::set<DefUseEdge> edges;

  for (const auto& stmt : statements) {
    if (stmt.empty()) continue;
    // Position of the top-level '=' and the `for ... in` target span.
    // npos when the statement assigns nothing.
    std::size_t assign = std::string::npos;
    int depth = 0;
    for (std::size_t i = 0; i < stmt.size(); ++i) {
      const auto& x = stmt[i]->text;
      if (x == "(" || x == "[" || x == "{") ++depth;
      else if (x == ")" || x == "]" || x == "}") depth = std::max(0, depth - 1);
      else if (depth == 0 && x == "=" && stmt[i]->kind == TokenKind::operator_) {
        assign = i;
        break;
      }
    }
    std::size_t for_begin = 0, for_end = 0;
    if (stmt[0]->kind == TokenKind::keyword && stmt[0]->text == "for") {
      for_begin = 1;
      for_end = 1;
      while (for_end < stmt.size() && !(stmt[for_end]->kind == TokenKind::keyword && stmt[for_end]->text == "in"))
        ++for_end;
    }

    std::vector<const CodeToken*> defs, uses;
    depth = 0;
    for (std::size_t i = 0; i < stmt.size(); ++i) {
      const auto* t = stmt[i];
      const auto& x = t->text;
      if (x == "(" || x == "[" || x == "{") ++depth;
      else if (x == ")" || x == "]" || x == "}") depth = std::max(0, depth - 1);
      if (t->kind != TokenKind::identifier) continue;
      const bool after_dot = i > 0 && stmt[i - 1]->text == ".";
      const bool before_call = i + 1 < stmt.size() && stmt[i + 1]->text == "(";
      const bool before_dot = i + 1 < stmt.size() && stmt[i + 1]->text == ".";
      if (after_dot || before_call) continue;
      const bool lhs = assign != std::string::npos && i < assign && depth == 0 && !before_dot;
      const bool for_target = i >= for_begin && i < for_end;
      if (lhs || for_target) defs.push_back(t);
      else uses.push_back(t);
    }
    for (const auto* u : uses) {
      auto it = last_def.find(u->text);
      if (it != last_def.end()) edges.insert({u->text, it->second, u->line});
    }
    for (const auto* d : defs) last_def[d->text] = d->line;
  }
  return {edges.begin(), edges.end()};
}

}  // namespace ace::codeparse
