#include "ace/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ace/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ace {

std::string to_string(const Issue& issue) {
  std::ostringstream os;
  os << (issue.kind == Issue::Kind::parse ? "parse error" : "integrity error");
  if (!issue.file.empty()) {
    os << " in " << issue.file;
    if (issue.line > 0) os << ":" << issue.line;
  }
  if (!issue.id.empty()) os << " [" << issue.id << "]";
  os << ": " << issue.message;
  return os.str();
}

namespace {
std::string summarize(const std::vector<Issue>& issues) {
  std::string s = std::to_string(issues.size()) + " validation issue(s)";
  if (!issues.empty()) s += "; first: " + to_string(issues.front());
  return s;
}
}  // namespace

ValidationError::ValidationError(std::vector<Issue> issues)
    : Error(summarize(issues)), issues_(std::move(issues)) {}

}  // namespace ace

namespace ace::corpus {

std::string to_string(Difficulty d) { return d == Difficulty::basic ? "basic" : "competition"; }
std::string to_string(Speaker s) { return s == Speaker::student ? "student" : "assistant"; }
std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::irrelevant: return "irrelevant";
    case Criterion::repeated: return "repeated";
    case Criterion::direct: return "direct";
    case Criterion::premature: return "premature";
    case Criterion::ground_truth_pairing: return "ground_truth_pairing";
  }
  return "irrelevant";
}

std::optional<Difficulty> parse_difficulty(std::string_view s) {
  if (s == "basic") return Difficulty::basic;
  if (s == "competition") return Difficulty::competition;
  return std::nullopt;
}
std::optional<Speaker> parse_speaker(std::string_view s) {
  if (s == "student") return Speaker::student;
  if (s == "assistant") return Speaker::assistant;
  return std::nullopt;
}
std::optional<Criterion> parse_criterion(std::string_view s) {
  for (auto c : {Criterion::irrelevant, Criterion::repeated, Criterion::direct,
                 Criterion::premature, Criterion::ground_truth_pairing}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

std::vector<std::string> ReferenceSet::all() const {
  std::vector<std::string> out = main;
  out.insert(out.end(), alternates.begin(), alternates.end());
  return out;
}

std::vector<std::size_t> DialogueThread::assistant_turn_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < turns.size(); ++i)
    if (turns[i].speaker == Speaker::assistant) out.push_back(i);
  return out;
}

const Problem* Corpus::find_problem(std::string_view id) const {
  auto it = std::lower_bound(problems.begin(), problems.end(), id,
                             [](const Problem& p, std::string_view k) { return p.id < k; });
  return it != problems.end() && it->id == id ? &*it : nullptr;
}

const DialogueThread* Corpus::find_thread(std::string_view id) const {
  auto it = std::lower_bound(threads.begin(), threads.end(), id,
                             [](const DialogueThread& t, std::string_view k) { return t.id < k; });
  return it != threads.end() && it->id == id ? &*it : nullptr;
}

// -- JSON ---------------------------------------------------------------------

void to_json(json& j, const UnitTest& v) { j = json{{"input", v.input}, {"expected", v.expected}}; }

void to_json(json& j, const Problem& v) {
  j = json{{"id", v.id},
           {"title", v.title},
           {"statement", v.statement},
           {"input_spec", v.input_spec},
           {"output_spec", v.output_spec},
           {"unit_tests", v.unit_tests},
           {"buggy_code", v.buggy_code},
           {"bug_description", v.bug_description},
           {"bug_fix", v.bug_fix},
           {"difficulty", to_string(v.difficulty)},
           {"source", v.source}};
}

void to_json(json& j, const Turn& v) {
  j = json{{"speaker", to_string(v.speaker)}, {"text", v.text}};
  if (v.code) j["code"] = *v.code;
}

void to_json(json& j, const ReferenceSet& v) {
  j = json{{"main", v.main}, {"alternates", v.alternates}};
}

void to_json(json& j, const DialogueThread& v) {
  json refs = json::object();
  for (const auto& [idx, set] : v.references) refs[std::to_string(idx)] = set;
  j = json{{"id", v.id}, {"problem_id", v.problem_id}, {"turns", v.turns}, {"references", refs}};
}

void to_json(json& j, const PreferencePair& v) {
  j = json{{"id", v.id},
           {"context",
            json{{"problem_id", v.context.problem_id}, {"dialogue_prefix", v.context.dialogue_prefix}}},
           {"chosen", v.chosen},
           {"rejected", v.rejected},
           {"criterion", to_string(v.criterion)}};
}

namespace {

struct Decoder {
  std::vector<Issue>& issues;
  std::string file;
  std::string id;

  void fail(const std::string& msg) {
    issues.push_back(Issue{Issue::Kind::integrity, file, id, msg, 0});
  }

  bool object(const json& j, const std::string& what) {
    if (j.is_object()) return true;
    fail(what + " must be a JSON object");
    return false;
  }

  void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
    for (const auto& [k, _] : j.items()) {
      bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
      if (!ok) fail(what + ": unknown field '" + k + "'");
    }
  }

  std::string str(const json& j, const char* key, const std::string& what) {
    auto it = j.find(key);
    if (it == j.end()) {
      fail(what + ": missing field '" + key + "'");
      return {};
    }
    if (!it->is_string()) {
      fail(what + ": field '" + key + "' must be a string");
      return {};
    }
    return it->get<std::string>();
  }

  std::vector<std::string> str_list(const json& j, const char* key, const std::string& what) {
    std::vector<std::string> out;
    auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
      fail(what + ": field '" + key + "' must be an array of strings");
      return out;
    }
    for (const auto& e : *it) {
      if (e.is_string()) out.push_back(e.get<std::string>());
      else fail(what + ": field '" + key + "' must contain only strings");
    }
    return out;
  }
};

}  // namespace

Problem problem_from_json(const json& j, std::vector<Issue>& issues, const std::string& file) {
  Problem p;
  Decoder d{issues, file, {}};
  if (!d.object(j, "problem")) return p;
  if (j.contains("id") && j["id"].is_string()) d.id = j["id"].get<std::string>();
  d.only_keys(j,
              {"id", "title", "statement", "input_spec", "output_spec", "unit_tests", "buggy_code",
               "bug_description", "bug_fix", "difficulty", "source"},
              "problem");
  p.id = d.str(j, "id", "problem");
  p.title = d.str(j, "title", "problem");
  p.statement = d.str(j, "statement", "problem");
  p.input_spec = d.str(j, "input_spec", "problem");
  p.output_spec = d.str(j, "output_spec", "problem");
  p.buggy_code = d.str(j, "buggy_code", "problem");
  p.bug_description = d.str(j, "bug_description", "problem");
  p.bug_fix = d.str(j, "bug_fix", "problem");
  p.source = d.str(j, "source", "problem");
  auto diff = d.str(j, "difficulty", "problem");
  if (auto parsed = parse_difficulty(diff)) p.difficulty = *parsed;
  else if (j.contains("difficulty")) d.fail("problem: difficulty must be 'basic' or 'competition'");
  auto tests = j.find("unit_tests");
  if (tests == j.end() || !tests->is_array()) {
    d.fail("problem: field 'unit_tests' must be an array");
  } else {
    for (const auto& t : *tests) {
      if (!d.object(t, "unit test")) continue;
      d.only_keys(t, {"input", "expected"}, "unit test");
      p.unit_tests.push_back({d.str(t, "input", "unit test"), d.str(t, "expected", "unit test")});
    }
  }
  return p;
}

Turn turn_from_json(const json& j, std::vector<Issue>& issues, const std::string& file,
                    const std::string& owner) {
  Turn t;
  Decoder d{issues, file, owner};
  if (!d.object(j, "turn")) return t;
  d.only_keys(j, {"speaker", "text", "code"}, "turn");
  auto sp = d.str(j, "speaker", "turn");
  if (auto parsed = parse_speaker(sp)) t.speaker = *parsed;
  else if (j.contains("speaker")) d.fail("turn: speaker must be 'student' or 'assistant'");
  t.text = d.str(j, "text", "turn");
  if (j.contains("code")) {
    if (j["code"].is_string()) t.code = j["code"].get<std::string>();
    else if (!j["code"].is_null()) d.fail("turn: field 'code' must be a string");
  }
  return t;
}

DialogueThread thread_from_json(const json& j, std::vector<Issue>& issues, const std::string& file) {
  DialogueThread th;
  Decoder d{issues, file, {}};
  if (!d.object(j, "thread")) return th;
  if (j.contains("id") && j["id"].is_string()) d.id = j["id"].get<std::string>();
  d.only_keys(j, {"id", "problem_id", "turns", "references"}, "thread");
  th.id = d.str(j, "id", "thread");
  th.problem_id = d.str(j, "problem_id", "thread");
  auto turns = j.find("turns");
  if (turns == j.end() || !turns->is_array()) {
    d.fail("thread: field 'turns' must be an array");
  } else {
    for (const auto& t : *turns) th.turns.push_back(turn_from_json(t, issues, file, d.id));
  }
  auto refs = j.find("references");
  if (refs == j.end() || !refs->is_object()) {
    d.fail("thread: field 'references' must be an object keyed by assistant turn index");
    return th;
  }
  for (const auto& [key, value] : refs->items()) {
    std::size_t idx = 0;
    bool numeric = !key.empty() && std::all_of(key.begin(), key.end(), ::isdigit) && key.size() < 10;
    if (!numeric) {
      d.fail("thread: reference key '" + key + "' is not a turn index");
      continue;
    }
    idx = std::stoul(key);
    if (!d.object(value, "reference set")) continue;
    d.only_keys(value, {"main", "alternates"}, "reference set");
    ReferenceSet rs;
    rs.main = d.str_list(value, "main", "reference set");
    rs.alternates = d.str_list(value, "alternates", "reference set");
    th.references.emplace(idx, std::move(rs));
  }
  return th;
}

PreferencePair pair_from_json(const json& j, std::vector<Issue>& issues, const std::string& file) {
  PreferencePair p;
  Decoder d{issues, file, {}};
  if (!d.object(j, "preference pair")) return p;
  if (j.contains("id") && j["id"].is_string()) d.id = j["id"].get<std::string>();
  d.only_keys(j, {"id", "context", "chosen", "rejected", "criterion"}, "preference pair");
  p.id = d.str(j, "id", "preference pair");
  p.chosen = d.str(j, "chosen", "preference pair");
  p.rejected = d.str(j, "rejected", "preference pair");
  auto crit = d.str(j, "criterion", "preference pair");
  if (auto parsed = parse_criterion(crit)) p.criterion = *parsed;
  else if (j.contains("criterion")) d.fail("preference pair: unknown criterion '" + crit + "'");
  auto ctx = j.find("context");
  if (ctx == j.end() || !d.object(*ctx, "context")) {
    if (ctx == j.end()) d.fail("preference pair: missing field 'context'");
    return p;
  }
  d.only_keys(*ctx, {"problem_id", "dialogue_prefix"}, "context");
  p.context.problem_id = d.str(*ctx, "problem_id", "context");
  auto prefix = ctx->find("dialogue_prefix");
  if (prefix == ctx->end() || !prefix->is_array()) {
    d.fail("context: field 'dialogue_prefix' must be an array");
  } else {
    for (const auto& t : *prefix) p.context.dialogue_prefix.push_back(turn_from_json(t, issues, file, d.id));
  }
  return p;
}

// -- validation -----------------------------------------------------------------

namespace {

bool blank(std::string_view s) { return text::normalize_ws(s).empty(); }

void check_turn(const Turn& t, std::size_t idx, const std::string& owner, std::vector<Issue>& out) {
  if (blank(t.text))
    out.push_back({Issue::Kind::integrity, {}, owner, "turn " + std::to_string(idx) + " has empty text"});
  if (t.code && blank(*t.code))
    out.push_back({Issue::Kind::integrity, {}, owner, "turn " + std::to_string(idx) + " has an empty code field"});
}

}  // namespace

std::vector<Issue> validate(const Corpus& corpus) {
  std::vector<Issue> out;
  auto add = [&](const std::string& id, std::string msg) {
    out.push_back({Issue::Kind::integrity, {}, id, std::move(msg)});
  };

  std::set<std::string> problem_ids;
  for (const auto& p : corpus.problems) {
    if (p.id.empty()) add(p.id, "problem id is empty");
    if (!problem_ids.insert(p.id).second) add(p.id, "duplicate problem id");
    if (blank(p.buggy_code)) add(p.id, "buggy_code is empty");
    if (p.unit_tests.empty()) add(p.id, "problem has no unit tests");
  }

  std::set<std::string> thread_ids;
  for (const auto& th : corpus.threads) {
    if (th.id.empty()) add(th.id, "thread id is empty");
    if (!thread_ids.insert(th.id).second) add(th.id, "duplicate thread id");
    if (!problem_ids.count(th.problem_id))
      add(th.id, "dangling problem_id '" + th.problem_id + "'");
    if (th.turns.empty()) add(th.id, "thread has no turns");
    for (std::size_t i = 0; i < th.turns.size(); ++i) {
      const auto expected = i % 2 == 0 ? Speaker::student : Speaker::assistant;
      if (th.turns[i].speaker != expected)
        add(th.id, "turns do not alternate student/assistant at turn " + std::to_string(i));
      check_turn(th.turns[i], i, th.id, out);
      if (th.turns[i].speaker == Speaker::assistant && !th.references.count(i))
        add(th.id, "assistant turn " + std::to_string(i) + " has no ReferenceSet");
    }
    for (const auto& [idx, rs] : th.references) {
      if (idx >= th.turns.size() || th.turns[idx].speaker != Speaker::assistant)
        add(th.id, "ReferenceSet key " + std::to_string(idx) + " does not address an assistant turn");
      if (rs.main.empty()) add(th.id, "ReferenceSet " + std::to_string(idx) + " has no main response");
      std::set<std::string> seen;
      for (const auto& r : rs.all()) {
        auto norm = text::normalize_ws(r);
        if (norm.empty()) add(th.id, "ReferenceSet " + std::to_string(idx) + " has an empty response");
        else if (!seen.insert(norm).second)
          add(th.id, "ReferenceSet " + std::to_string(idx) + " repeats response '" + norm + "'");
      }
    }
  }
  return out;
}

std::vector<Issue> validate(const PreferencePair& pair) {
  std::vector<Issue> out;
  auto add = [&](std::string msg) { out.push_back({Issue::Kind::integrity, {}, pair.id, std::move(msg)}); };
  if (pair.id.empty()) add("pair id is empty");
  if (blank(pair.chosen)) add("chosen response is empty");
  if (blank(pair.rejected)) add("rejected response is empty");
  if (text::normalize_ws(pair.chosen) == text::normalize_ws(pair.rejected))
    add("chosen and rejected responses are identical");
  const auto& prefix = pair.context.dialogue_prefix;
  if (prefix.empty() || prefix.back().speaker != Speaker::student)
    add("dialogue_prefix must end with a student turn");
  for (std::size_t i = 0; i < prefix.size(); ++i) check_turn(prefix[i], i, pair.id, out);
  return out;
}

// -- files ----------------------------------------------------------------------

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

void require_known_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& what) {
  if (!j.is_object()) throw Error(what + ": expected a JSON object");
  for (const auto& [k, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw Error(what + ": unknown field '" + k + "'");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError({{Issue::Kind::parse, path.string(), {}, "cannot open file", 0}});
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, content.size());
    const int line = 1 + static_cast<int>(std::count(content.begin(), content.begin() + upto, '\n'));
    throw ValidationError({{Issue::Kind::parse, path.string(), {}, e.what(), line}});
  }
}

namespace {

std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

template <typename F>
void for_each_document(const fs::path& dir, std::vector<Issue>& issues, F&& fn) {
  for (const auto& file : json_files(dir)) {
    try {
      fn(read_json_file(file), file.string());
    } catch (const ValidationError& e) {
      issues.insert(issues.end(), e.issues().begin(), e.issues().end());
    }
  }
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace

Corpus load_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw ValidationError({{Issue::Kind::parse, root.string(), {}, "corpus directory does not exist", 0}});
  }
  Corpus corpus;
  std::vector<Issue> issues;
  // Structurally broken documents are reported once and kept out of the
  // semantic pass.
  for_each_document(root / "problems", issues, [&](const json& j, const std::string& file) {
    const auto before = issues.size();
    auto p = problem_from_json(j, issues, file);
    if (issues.size() == before) corpus.problems.push_back(std::move(p));
  });
  for_each_document(root / "threads", issues, [&](const json& j, const std::string& file) {
    const auto before = issues.size();
    auto t = thread_from_json(j, issues, file);
    if (issues.size() == before) corpus.threads.push_back(std::move(t));
  });
  std::stable_sort(corpus.problems.begin(), corpus.problems.end(),
                   [](const Problem& a, const Problem& b) { return a.id < b.id; });
  std::stable_sort(corpus.threads.begin(), corpus.threads.end(),
                   [](const DialogueThread& a, const DialogueThread& b) { return a.id < b.id; });
  auto semantic = validate(corpus);
  issues.insert(issues.end(), semantic.begin(), semantic.end());
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& root) {
  for (const auto& p : corpus.problems) write_file(root / "problems" / (p.id + ".json"), canonical_dump(json(p)));
  for (const auto& t : corpus.threads) write_file(root / "threads" / (t.id + ".json"), canonical_dump(json(t)));
}

std::vector<PreferencePair> load_preferences(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ValidationError({{Issue::Kind::parse, dir.string(), {}, "preferences directory does not exist", 0}});
  }
  std::vector<PreferencePair> pairs;
  std::vector<Issue> issues;
  for_each_document(dir, issues, [&](const json& j, const std::string& file) {
    if (!j.is_array()) {
      issues.push_back({Issue::Kind::integrity, file, {}, "preference file must be a JSON array", 0});
      return;
    }
    for (const auto& e : j) {
      auto before = issues.size();
      auto pair = pair_from_json(e, issues, file);
      if (issues.size() == before) {
        auto more = validate(pair);
        for (auto& m : more) m.file = file;
        issues.insert(issues.end(), more.begin(), more.end());
      }
      pairs.push_back(std::move(pair));
    }
  });
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return pairs;
}

void save_preferences(const std::vector<PreferencePair>& pairs, const fs::path& dir) {
  std::map<std::string, json> groups;
  for (const auto& p : pairs) {
    auto slash = p.id.find('/');
    std::string group = slash == std::string::npos ? "pairs" : p.id.substr(0, slash);
    auto& arr = groups[group];
    if (arr.is_null()) arr = json::array();
    arr.push_back(p);
  }
  for (const auto& [group, arr] : groups) write_file(dir / (group + ".json"), canonical_dump(arr));
}

// -- preference construction ----------------------------------------------------

GeneratorError::GeneratorError(std::string thread_id, std::size_t turn_index, const std::string& what)
    : Error("generator failed for thread '" + thread_id + "' turn " + std::to_string(turn_index) + ": " + what),
      thread_id_(std::move(thread_id)),
      turn_index_(turn_index) {}

std::optional<std::string> RuleBasedGenerator::generate(const InvalidRequest& r) {
  const auto pick = [&](std::size_t n) {
    std::uint64_t h = text::fnv1a(r.thread.id, r.seed);
    h = text::splitmix64(h ^ (r.turn_index * 0x9e3779b97f4a7c15ULL) ^ r.variant);
    return static_cast<std::size_t>(h % n);
  };
  switch (r.criterion) {
    case Criterion::irrelevant: {
      std::vector<const std::string*> pool;
      for (const auto& th : r.corpus.threads) {
        if (th.problem_id == r.problem.id) continue;
        for (const auto& [_, rs] : th.references) {
          for (const auto& s : rs.main) pool.push_back(&s);
          for (const auto& s : rs.alternates) pool.push_back(&s);
        }
      }
      if (pool.empty()) return std::nullopt;
      return *pool[pick(pool.size())];
    }
    case Criterion::repeated: {
      std::vector<const std::string*> prior;
      for (std::size_t i = 0; i < r.turn_index && i < r.thread.turns.size(); ++i)
        if (r.thread.turns[i].speaker == Speaker::assistant) prior.push_back(&r.thread.turns[i].text);
      if (prior.empty()) return std::nullopt;
      return *prior[r.variant % prior.size()];
    }
    case Criterion::direct:
      if (blank(r.problem.bug_fix)) return std::nullopt;
      return r.problem.bug_fix;
    case Criterion::premature: {
      if (blank(r.problem.bug_description) && blank(r.problem.bug_fix)) return std::nullopt;
      if (blank(r.problem.bug_description)) return r.problem.bug_fix;
      if (blank(r.problem.bug_fix)) return r.problem.bug_description;
      return r.problem.bug_description + " " + r.problem.bug_fix;
    }
    case Criterion::ground_truth_pairing:
      return std::nullopt;
  }
  return std::nullopt;
}

std::vector<PreferencePair> build_preferences(const Corpus& corpus, InvalidResponseGenerator& generator,
                                              std::size_t per_turn_pairs, std::uint64_t seed) {
  if (per_turn_pairs == 0) throw Error("per_turn_pairs must be at least 1");
  constexpr std::size_t kCriteria = std::size(kInvalidCriteria);
  std::vector<PreferencePair> out;

  for (const auto& thread : corpus.threads) {
    const Problem* problem = corpus.find_problem(thread.problem_id);
    if (!problem) throw GeneratorError(thread.id, 0, "dangling problem_id");
    for (std::size_t turn : thread.assistant_turn_indices()) {
      auto rs = thread.references.find(turn);
      if (rs == thread.references.end() || rs->second.main.empty())
        throw GeneratorError(thread.id, turn, "empty reference set");
      const auto refs = rs->second.all();
      std::set<std::string> ref_norms;
      for (const auto& r : refs) ref_norms.insert(text::normalize_ws(r));

      PairContext ctx{thread.problem_id,
                      std::vector<Turn>(thread.turns.begin(), thread.turns.begin() + turn)};
      std::size_t variants[kCriteria] = {};
      std::size_t attempt = 0, misses = 0, produced = 0;
      while (produced < per_turn_pairs) {
        const std::size_t ci = attempt++ % kCriteria;
        const Criterion criterion = kInvalidCriteria[ci];
        std::optional<std::string> rejected;
        try {
          rejected = generator.generate({corpus, *problem, thread, turn, criterion, variants[ci]++, seed});
        } catch (const GeneratorError&) {
          throw;
        } catch (const std::exception& e) {
          throw GeneratorError(thread.id, turn, e.what());
        }
        if (!rejected || blank(*rejected) || ref_norms.count(text::normalize_ws(*rejected))) {
          if (++misses > 4 * kCriteria)
            throw GeneratorError(thread.id, turn, "no criterion produced a usable invalid response");
          continue;
        }
        misses = 0;
        PreferencePair pair;
        pair.id = thread.id + "/t" + std::to_string(turn) + "/" + std::to_string(produced);
        pair.context = ctx;
        pair.chosen = refs[produced % refs.size()];
        pair.rejected = std::move(*rejected);
        pair.criterion = criterion;
        out.push_back(std::move(pair));
        ++produced;
      }
    }
  }
  return out;
}

}  // namespace ace::corpus
