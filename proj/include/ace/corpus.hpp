#pragma once

// Socratic debugging benchmark: problems, dialogue threads with per-turn
// reference responses, and the preference pairs derived from them.
//
// On-disk layout (one JSON document per record):
//   <root>/problems/<id>.json
//   <root>/threads/<id>.json
//   <root>/preferences/<thread-id>.json   (array of pairs for that thread)

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ace/error.hpp"

namespace ace::corpus {

enum class Difficulty { basic, competition };
enum class Speaker { student, assistant };
enum class Criterion { irrelevant, repeated, direct, premature, ground_truth_pairing };

std::string to_string(Difficulty d);
std::string to_string(Speaker s);
std::string to_string(Criterion c);
std::optional<Difficulty> parse_difficulty(std::string_view s);
std::optional<Speaker> parse_speaker(std::string_view s);
std::optional<Criterion> parse_criterion(std::string_view s);

/// The four invalidity criteria, in generation order.
inline constexpr Criterion kInvalidCriteria[] = {Criterion::irrelevant, Criterion::repeated,
                                                 Criterion::direct, Criterion::premature};

struct UnitTest {
  std::string input;
  std::string expected;
  bool operator==(const UnitTest&) const = default;
};

struct Problem {
  std::string id;
  std::string title;
  std::string statement;
  std::string input_spec;
  std::string output_spec;
  std::vector<UnitTest> unit_tests;
  std::string buggy_code;
  std::string bug_description;
  std::string bug_fix;
  Difficulty difficulty = Difficulty::basic;
  std::string source;
  bool operator==(const Problem&) const = default;
};

struct Turn {
  Speaker speaker = Speaker::student;
  std::string text;
  std::optional<std::string> code;
  bool operator==(const Turn&) const = default;
};

struct ReferenceSet {
  std::vector<std::string> main;
  std::vector<std::string> alternates;
  /// main followed by alternates.
  std::vector<std::string> all() const;
  bool operator==(const ReferenceSet&) const = default;
};

struct DialogueThread {
  std::string id;
  std::string problem_id;
  std::vector<Turn> turns;
  /// Keyed by the index into `turns` of the assistant turn.
  std::map<std::size_t, ReferenceSet> references;

  std::vector<std::size_t> assistant_turn_indices() const;
  bool operator==(const DialogueThread&) const = default;
};

struct PairContext {
  std::string problem_id;
  std::vector<Turn> dialogue_prefix;
  bool operator==(const PairContext&) const = default;
};

struct PreferencePair {
  std::string id;
  PairContext context;
  std::string chosen;
  std::string rejected;
  Criterion criterion = Criterion::irrelevant;
  bool operator==(const PreferencePair&) const = default;
};

/// A validated corpus. Problems and threads are sorted by id.
struct Corpus {
  std::vector<Problem> problems;
  std::vector<DialogueThread> threads;

  const Problem* find_problem(std::string_view id) const;
  const DialogueThread* find_thread(std::string_view id) const;
};

// JSON mapping. Objects serialize with sorted keys, so dump() output is the
// canonical form.
void to_json(nlohmann::json& j, const UnitTest& v);
void to_json(nlohmann::json& j, const Problem& v);
void to_json(nlohmann::json& j, const Turn& v);
void to_json(nlohmann::json& j, const ReferenceSet& v);
void to_json(nlohmann::json& j, const DialogueThread& v);
void to_json(nlohmann::json& j, const PreferencePair& v);

/// Structural decoding; collects every problem found instead of throwing on
/// the first. Domain invariants are checked separately by validate().
Problem problem_from_json(const nlohmann::json& j, std::vector<Issue>& issues,
                          const std::string& file = {});
Turn turn_from_json(const nlohmann::json& j, std::vector<Issue>& issues,
                    const std::string& file = {}, const std::string& owner = {});
DialogueThread thread_from_json(const nlohmann::json& j, std::vector<Issue>& issues,
                                const std::string& file = {});
PreferencePair pair_from_json(const nlohmann::json& j, std::vector<Issue>& issues,
                              const std::string& file = {});

/// Every invariant of Problem, Turn, ReferenceSet, DialogueThread, and the
/// thread -> problem reference. Returns an empty list when the corpus is valid.
std::vector<Issue> validate(const Corpus& corpus);
std::vector<Issue> validate(const PreferencePair& pair);

/// Reads <root>/problems and <root>/threads. Throws ValidationError carrying
/// every issue found; never returns a partially loaded corpus. A root with
/// neither subdirectory is an empty corpus.
Corpus load_corpus(const std::filesystem::path& root);

/// Writes one canonical JSON document per problem and thread.
void save_corpus(const Corpus& corpus, const std::filesystem::path& root);

/// Canonical serialization used for every file the library writes: sorted
/// keys, two-space indent, trailing newline.
std::string canonical_dump(const nlohmann::json& j);

/// Parses a JSON file; parse failures become ValidationError with a line.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Throws Error unless `j` is an object whose keys all appear in `allowed`.
void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                        const std::string& what);

std::vector<PreferencePair> load_preferences(const std::filesystem::path& dir);
/// Groups by thread id (the prefix of the pair id) into preferences/<thread>.json.
void save_preferences(const std::vector<PreferencePair>& pairs,
                      const std::filesystem::path& dir);

// -- preference construction -------------------------------------------------

struct InvalidRequest {
  const Corpus& corpus;
  const Problem& problem;
  const DialogueThread& thread;
  std::size_t turn_index;      // assistant turn being answered
  Criterion criterion;
  std::size_t variant;         // how many times this criterion was drawn for the turn
  std::uint64_t seed;
};

/// Source of invalid (rejected) responses for one criterion. Returns nullopt
/// when the criterion cannot be realised for this turn (for example
/// `repeated` on the first assistant turn).
class InvalidResponseGenerator {
 public:
  virtual ~InvalidResponseGenerator() = default;
  virtual std::optional<std::string> generate(const InvalidRequest& request) = 0;
};

/// Offline generator:
///   irrelevant - a reference response from a different problem
///   repeated   - an earlier assistant turn, verbatim
///   direct     - the problem's bug_fix, verbatim
///   premature  - bug_description followed by bug_fix
class RuleBasedGenerator final : public InvalidResponseGenerator {
 public:
  std::optional<std::string> generate(const InvalidRequest& request) override;
};

class GeneratorError : public Error {
 public:
  GeneratorError(std::string thread_id, std::size_t turn_index, const std::string& what);
  const std::string& thread_id() const noexcept { return thread_id_; }
  std::size_t turn_index() const noexcept { return turn_index_; }

 private:
  std::string thread_id_;
  std::size_t turn_index_;
};

/// Emits exactly `per_turn_pairs` pairs per assistant turn. Chosen responses
/// cycle through the turn's references; criteria cycle through those the
/// generator can realise. Pair ids are "<thread>/t<turn>/<k>".
std::vector<PreferencePair> build_preferences(const Corpus& corpus,
                                              InvalidResponseGenerator& generator,
                                              std::size_t per_turn_pairs,
                                              std::uint64_t seed);

}  // namespace ace::corpus
